"""Annealing schedules A(s), B(s) and reverse-anneal time courses s(t).

Internal units: hbar = 1, time in ns, energies and rates in rad/ns.  Schedule
files carry GHz in the h = 1 convention and are multiplied by 2*pi on load.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterator

import numpy as np
from scipy import constants

from .errors import DomainError, FormatError, RangeError, SchedulingError

TWO_PI = 2.0 * math.pi
# k_B / hbar expressed in rad ns^-1 mK^-1
KB_OVER_HBAR = constants.k / constants.hbar * 1e-9 * 1e-3

BUNDLED_SCHEDULE = "dw2000q_approx.csv"


@dataclass(frozen=True)
class UnitConventions:
    kB_over_hbar: float = KB_OVER_HBAR
    two_pi: float = TWO_PI


@dataclass(frozen=True, eq=False)
class Schedule:
    """Sampled schedule curves, A and B in rad/ns, interpolated piecewise-linearly."""

    s: np.ndarray
    a: np.ndarray
    b: np.ndarray
    name: str = "schedule"

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if not (s.ndim == a.ndim == b.ndim == 1 and s.size == a.size == b.size):
            raise FormatError("s, A and B must be 1-d arrays of equal length")
        if s.size < 2:
            raise FormatError("a schedule needs at least two points")
        if not np.all(np.isfinite(s)) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
            raise FormatError("schedule contains non-finite values")
        if np.any(np.diff(s) <= 0):
            raise SchedulingError("schedule s values must be strictly increasing")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise RangeError(f"schedule must span s in [0, 1], got [{s[0]}, {s[-1]}]")
        if np.any(a < 0) or np.any(b < 0):
            raise RangeError("A(s) and B(s) must be nonnegative")
        if np.any(np.diff(a) > 0) or np.any(np.diff(b) < 0):
            warnings.warn(f"schedule '{self.name}': A not non-increasing or B not non-decreasing",
                          stacklevel=3)
        for arr in (s, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.s.tolist(), self.a.tolist(), self.b.tolist()))

    def __call__(self, s):
        return eval_schedule(self, s)

    def interval(self, s: float) -> int:
        """Index j of the linear piece [s_j, s_{j+1}] used for slopes at s."""
        j = int(np.searchsorted(self.s, s, side="right")) - 1
        return min(max(j, 0), self.s.size - 2)

    def slopes(self, s: float) -> tuple[float, float]:
        """dA/ds and dB/ds on the linear piece containing s (right-continuous)."""
        j = self.interval(s)
        ds = self.s[j + 1] - self.s[j]
        return (self.a[j + 1] - self.a[j]) / ds, (self.b[j + 1] - self.b[j]) / ds

    def node_slopes(self, s: float) -> tuple[float, float]:
        """Slopes at s, averaged over the two adjacent pieces when s is a grid point."""
        j = int(np.searchsorted(self.s, s))
        if j < self.s.size and self.s[j] == s and 0 < j < self.s.size - 1:
            left = self.slopes(self.s[j - 1])
            right = self.slopes(s)
            return 0.5 * (left[0] + right[0]), 0.5 * (left[1] + right[1])
        if s >= self.s[-1]:
            return self.slopes(self.s[-2])
        return self.slopes(s)

    def nodes_between(self, s0: float, s1: float) -> np.ndarray:
        """Grid points strictly inside the open interval between s0 and s1."""
        lo, hi = min(s0, s1), max(s0, s1)
        return self.s[(self.s > lo) & (self.s < hi)]


def load_schedule(csv_text: str, name: str = "schedule") -> Schedule:
    """Parse a schedule CSV with header ``s,A_GHz,B_GHz`` (values in GHz)."""
    reader = csv.DictReader(io.StringIO(csv_text.strip()))
    fields = [f.strip() for f in (reader.fieldnames or [])]
    missing = {"s", "A_GHz", "B_GHz"} - set(fields)
    if missing:
        raise FormatError(f"schedule CSV missing columns: {sorted(missing)}")
    reader.fieldnames = fields
    rows = []
    for lineno, row in enumerate(reader, start=2):
        try:
            rows.append((float(row["s"]), float(row["A_GHz"]), float(row["B_GHz"])))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"line {lineno}: non-numeric schedule row") from exc
    if len(rows) < 2:
        raise FormatError("schedule CSV needs at least two rows")
    arr = np.array(rows)
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise SchedulingError("schedule s values must be strictly increasing")
    return Schedule(arr[:, 0], TWO_PI * arr[:, 1], TWO_PI * arr[:, 2], name=name)


def read_schedule(path) -> Schedule:
    with open(path, encoding="utf-8") as fh:
        return load_schedule(fh.read(), name=str(path))


@lru_cache(maxsize=1)
def bundled_schedule() -> Schedule:
    """Reference device-like schedule shipped with the package."""
    text = resources.files("annealsim").joinpath("data", BUNDLED_SCHEDULE).read_text("utf-8")
    return load_schedule(text, name=BUNDLED_SCHEDULE)


def linear_schedule(a0: float = 1.0, b1: float = 1.0) -> Schedule:
    """Two-point schedule A = 2*pi*a0*(1-s), B = 2*pi*b1*s."""
    return Schedule(np.array([0.0, 1.0]), TWO_PI * np.array([a0, 0.0]),
                    TWO_PI * np.array([0.0, b1]), name="linear")


def eval_schedule(sched: Schedule, s):
    """Return (A(s), B(s)) in rad/ns; scalar or array input."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0) or np.any(s_arr > 1.0) or np.any(np.isnan(s_arr)):
        raise RangeError(f"s must lie in [0, 1], got {s}")
    a = np.interp(s_arr, sched.s, sched.a)
    b = np.interp(s_arr, sched.s, sched.b)
    if s_arr.ndim == 0:
        return float(a), float(b)
    return a, b


def temperature_to_rate(T_mK: float) -> float:
    """k_B T / hbar in rad/ns."""
    if not T_mK > 0:
        raise DomainError(f"temperature must be positive, got {T_mK} mK")
    return float(T_mK) * KB_OVER_HBAR


@dataclass(frozen=True)
class Branch:
    """One linear piece of s(t): s runs from s_start to s_end over [t_start, t_end]."""

    t_start: float
    t_end: float
    s_start: float
    s_end: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def rate(self) -> float:
        """ds/dt on this branch."""
        if self.duration <= 0:
            return 0.0
        return (self.s_end - self.s_start) / self.duration

    def s_at(self, t: float) -> float:
        if self.duration <= 0:
            return self.s_start
        x = (t - self.t_start) / self.duration
        return self.s_start + (self.s_end - self.s_start) * x


@dataclass(frozen=True)
class AnnealProtocol:
    """Reverse anneal (descend, pause, ascend) repeated `cycles` times, or a forward anneal."""

    tau: float
    s_inv: float = 1.0
    t_pause: float = 0.0
    cycles: int = 1
    mode: str = "reverse"

    def __post_init__(self):
        if self.mode not in ("reverse", "forward"):
            raise DomainError(f"unknown protocol mode {self.mode!r}")
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if self.mode == "reverse":
            if not 0.0 <= self.s_inv <= 1.0:
                raise RangeError("s_inv must lie in [0, 1]")
            if self.t_pause < 0:
                raise DomainError("t_pause must be nonnegative")
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise DomainError("cycles must be a positive integer")

    @property
    def total_time(self) -> float:
        """Duration of a single cycle."""
        if self.mode == "forward":
            return float(self.tau)
        return 2.0 * self.tau * (1.0 - self.s_inv) + self.t_pause

    @property
    def t_descent(self) -> float:
        return self.tau * (1.0 - self.s_inv)

    def single(self) -> "AnnealProtocol":
        return AnnealProtocol(self.tau, self.s_inv, self.t_pause, 1, self.mode)

    def branches(self) -> list[Branch]:
        """Linear pieces of one cycle; zero-length pieces are dropped."""
        if self.mode == "forward":
            return [Branch(0.0, self.tau, 0.0, 1.0)]
        t1 = self.t_descent
        t2 = t1 + self.t_pause
        t3 = self.total_time
        out = [Branch(0.0, t1, 1.0, self.s_inv),
               Branch(t1, t2, self.s_inv, self.s_inv),
               Branch(t2, t3, self.s_inv, 1.0)]
        return [b for b in out if b.duration > 0]

    def iter_cycles(self) -> Iterator[int]:
        return iter(range(self.cycles))


def s_of_t(proto: AnnealProtocol, t: float) -> float:
    """Schedule parameter at time t within one cycle."""
    t_a = proto.total_time
    if t < 0 or t > t_a or math.isnan(t):
        raise RangeError(f"t={t} outside [0, {t_a}]")
    if proto.mode == "forward":
        return t / proto.tau
    t1 = proto.t_descent
    t2 = t1 + proto.t_pause
    if t <= t1:
        return 1.0 - t / proto.tau
    if t <= t2:
        return proto.s_inv
    if t >= t_a:
        return 1.0
    return proto.s_inv + (t - t2) / proto.tau


def ds_dt(proto: AnnealProtocol, t: float) -> float:
    """Right derivative of s(t) within one cycle."""
    for br in proto.branches():
        if br.t_start <= t < br.t_end:
            return br.rate
    return proto.branches()[-1].rate
