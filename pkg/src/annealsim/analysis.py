"""Result analytics: excited-level bins, l2 distances between sweep curves,
exhaustive PTRE calibration, SVMC sweep-count selection and the maximum-spin bound."""
from __future__ import annotations

import csv
import io
import itertools
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DomainError, FormatError, InsufficientData
from .model import ProblemSpec, max_spin_overlap, popcount
from .ptre import HybridSpectrum, evolve_ptre, population_from_state
from .schedule import AnnealProtocol, Schedule, bundled_schedule
from .svmc import SvmcConfig, run_svmc

GRID_ATOL = 1e-9
LOSS_HEADER = ["W_mk", "T_mk", "eta_g2", "loss"]


def inversion_grid() -> np.ndarray:
    """Inversion points 0.02 k, k = 1..44."""
    return np.round(0.02 * np.arange(1, 45), 10)


@dataclass(frozen=True)
class Observable:
    """Population of bin `level` on one branch, starting from basis state `initial`.

    Branch "up" counts states with `level` spins down, branch "down" states with
    `level` spins up; level 0 gives the all-up and all-down populations.
    """

    initial: int
    branch: str = "up"
    level: int = 0

    def __post_init__(self):
        if self.branch not in ("up", "down"):
            raise DomainError(f"branch must be 'up' or 'down', got {self.branch!r}")
        if self.level < 0:
            raise DomainError("level must be nonnegative")


@dataclass
class SweepCurve:
    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    observable: Observable | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise DomainError("grid and values must be 1-d arrays of equal length")
        if self.grid.size and np.any(np.diff(self.grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        if np.any(self.values < -1e-12) or np.any(self.values > 1 + 1e-12):
            raise DomainError("curve values must lie in [0, 1]")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
            if self.stderr.shape != self.values.shape:
                raise DomainError("stderr must match values")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s_inv", "value", "stderr"])
        err = self.stderr if self.stderr is not None else np.zeros_like(self.values)
        for s, v, e in zip(self.grid, self.values, err):
            w.writerow([f"{s:.6g}", f"{v:.12g}", f"{e:.12g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, observable: Observable | None = None, **meta) -> "SweepCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["s_inv", "value", "stderr"]:
            raise FormatError("curve CSV header must be 's_inv,value,stderr'")
        try:
            data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float).reshape(-1, 3)
        except ValueError as exc:
            raise FormatError(f"non-numeric curve entry: {exc}") from None
        return cls(data[:, 0], data[:, 1], data[:, 2], observable, dict(meta))


def _as_populations(data, n: int) -> np.ndarray:
    arr = np.asarray(data)
    if np.issubdtype(arr.dtype, np.integer):
        if arr.size == 0:
            raise InsufficientData("no samples")
        return np.bincount(arr.astype(np.int64), minlength=1 << n) / arr.size
    if arr.shape[-1] != 1 << n:
        raise DomainError("population vector length must be 2^N")
    return arr.astype(float)


def excited_bin(data, n: int, level: int) -> tuple[float, float]:
    """(up branch, down branch) populations of bin `level`.

    `data` is either a population vector over the 2^N basis states or an integer
    array of sampled final states.  The up branch sums all states with `level`
    spins down, the down branch all states with `level` spins up.
    """
    if not 0 <= level <= n:
        raise DomainError(f"level must lie in [0, {n}]")
    pops = _as_populations(data, n)
    k = popcount(np.arange(1 << n))
    return float(pops[..., k == level].sum(axis=-1)), float(pops[..., k == n - level].sum(axis=-1))


def observe(pops: np.ndarray, n: int, obs: Observable) -> float:
    up, down = excited_bin(pops, n, obs.level)
    return up if obs.branch == "up" else down


def l2_distance(a: SweepCurve, b: SweepCurve) -> float:
    if a.grid.shape != b.grid.shape or not np.allclose(a.grid, b.grid, rtol=0, atol=GRID_ATOL):
        raise AlignmentError("curves are sampled on different grids")
    return float(np.sqrt(np.sum((a.values - b.values) ** 2)))


def total_l2(sim: list[SweepCurve], ref: list[SweepCurve]) -> float:
    """Sum of per-observable l2 distances (curves paired by position)."""
    if len(sim) != len(ref):
        raise AlignmentError("curve lists differ in length")
    return float(sum(l2_distance(a, b) for a, b in zip(sim, ref)))


# ---------------------------------------------------------------- simulation sweeps

def _union_grid(curves: list[SweepCurve]) -> np.ndarray:
    return np.unique(np.round(np.concatenate([c.grid for c in curves]), 12))


def ptre_sweep(spec: ProblemSpec, sched: Schedule, spectrum: HybridSpectrum, initial: int,
               s_grid, tau: float, t_pause: float = 0.0, cycles: int = 1) -> np.ndarray:
    """Final population vectors, one row per inversion point."""
    p0 = population_from_state(spec.n_qubits, initial)
    rows = [evolve_ptre(spec, sched, AnnealProtocol(tau, float(s), t_pause, cycles), p0, spectrum).probs
            for s in s_grid]
    return np.array(rows)


def svmc_sweep(spec: ProblemSpec, sched: Schedule, cfg: SvmcConfig, initial: int, s_grid,
               tau: float = 1.0, t_pause: float = 0.0, cycles: int = 1) -> np.ndarray:
    """Empirical population vectors, one row per inversion point."""
    rows = []
    for s in s_grid:
        finals = run_svmc(spec, sched, AnnealProtocol(tau, float(s), t_pause, cycles), initial, cfg)
        rows.append(_as_populations(finals, spec.n_qubits))
    return np.array(rows)


def simulated_curves(reference: list[SweepCurve], n: int, sweep) -> list[SweepCurve]:
    """Simulated counterparts of `reference`; sweep(initial, grid) -> population rows."""
    grid = _union_grid(reference)
    cache: dict[int, np.ndarray] = {}
    out = []
    for ref in reference:
        obs = ref.observable
        if obs is None:
            raise DomainError("reference curves need an observable")
        if obs.initial not in cache:
            cache[obs.initial] = sweep(obs.initial, grid)
        pops = cache[obs.initial]
        idx = np.searchsorted(grid, np.round(ref.grid, 12))
        vals = np.array([observe(pops[i], n, obs) for i in idx])
        out.append(SweepCurve(ref.grid, np.clip(vals, 0.0, 1.0), None, obs))
    return out


# ---------------------------------------------------------------- PTRE calibration

@dataclass(frozen=True)
class CalibrationGrid:
    W_range: tuple[float, ...]          # mK
    T_range: tuple[float, ...]          # mK
    eta_g2_set: tuple[float, ...]

    def __post_init__(self):
        for name in ("W_range", "T_range", "eta_g2_set"):
            vals = tuple(sorted(float(v) for v in getattr(self, name)))
            if not vals:
                raise InsufficientData(f"{name} is empty")
            object.__setattr__(self, name, vals)

    @classmethod
    def default(cls) -> "CalibrationGrid":
        """W in 6..40 mK (step 2), T in 6..30 mK (step 1), eta g^2 in {2.5, 5} x 10^-i, i = 1..5."""
        return cls(tuple(range(6, 41, 2)), tuple(range(6, 31)),
                   tuple(float(f"{m}e-{i}") for i in range(1, 6) for m in (2.5, 5)))

    def cells(self) -> list[tuple[float, float, float]]:
        """All (W, T, eta_g2) in lexicographic order."""
        return list(itertools.product(self.W_range, self.T_range, self.eta_g2_set))

    @property
    def size(self) -> int:
        return len(self.W_range) * len(self.T_range) * len(self.eta_g2_set)


@dataclass
class CalibrationResult:
    best: tuple[float, float, float]
    loss: float
    table: list[tuple[float, float, float, float]]    # (W, T, eta_g2, loss) in cell order

    def table_csv(self) -> str:
        return _loss_csv(self.table)


def _loss_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOSS_HEADER)
    for r in rows:
        w.writerow([repr(float(x)) for x in r])
    return buf.getvalue()


def _read_loss_table(path: Path) -> dict[tuple[float, float, float], float]:
    if not path.exists():
        return {}
    rows = list(csv.reader(path.read_text().splitlines()))
    if not rows:
        return {}
    if rows[0] != LOSS_HEADER:
        raise FormatError(f"{path}: unexpected loss-table header")
    out = {}
    for r in rows[1:]:
        if len(r) == 4:       # a truncated last line from an interrupted run is skipped
            out[(float(r[0]), float(r[1]), float(r[2]))] = float(r[3])
    return out


def calibrate_ptre(reference: list[SweepCurve], grid: CalibrationGrid, tau: float = 5000.0,
                   cutoff_thz: float = 1.0, n: int = 4, sched: Schedule | None = None,
                   threads: int = 1, table_path: str | Path | None = None) -> CalibrationResult:
    """Exhaustive search for (W, T, eta g^2) minimizing the summed l2 loss.

    Completed cells are appended to `table_path` as they finish, and cells already
    present there are not recomputed.  Ties go to the first cell in (W, T, eta)
    lexicographic order.
    """
    if not reference:
        raise InsufficientData("no reference curves")
    sched = sched or bundled_schedule()
    spec = ProblemSpec(n)
    cells = grid.cells()
    path = Path(table_path) if table_path else None
    done = _read_loss_table(path) if path else {}
    lock = threading.Lock()
    if path and not path.exists():
        path.write_text(_loss_csv([]))

    def cell_loss(cell):
        if cell in done:
            return done[cell]
        w_mk, t_mk, eta = cell
        spectrum = HybridSpectrum.from_lab_units(w_mk, t_mk, eta, cutoff_thz)
        sim = simulated_curves(reference, n, lambda z, g: ptre_sweep(spec, sched, spectrum, z, g, tau))
        loss = total_l2(sim, reference)
        if path:
            with lock, path.open("a") as fh:
                fh.write(_loss_csv([(*cell, loss)]).split("\n", 1)[1])
        return loss

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            losses = list(pool.map(cell_loss, cells))
    else:
        losses = [cell_loss(c) for c in cells]
    best = min(range(len(cells)), key=lambda i: (losses[i], i))
    table = [(*c, l) for c, l in zip(cells, losses)]
    return CalibrationResult(cells[best], losses[best], table)


# ---------------------------------------------------------------- SVMC sweep selection

@dataclass
class SweepSelection:
    best: int
    losses: dict[int, float]


def optimize_sweeps(reference: list[SweepCurve], sweep_candidates, n: int = 4,
                    sched: Schedule | None = None, samples: int = 10_000, seed: int = 0,
                    temperature_mk: float = 12.1, threads: int = 1) -> SweepSelection:
    """Sweep count (SVMC-TF) whose simulated curves minimize the summed l2 loss.

    Ties go to the first candidate in the order given.
    """
    if not reference:
        raise InsufficientData("no reference curves")
    cands = [int(c) for c in sweep_candidates]
    if not cands:
        raise InsufficientData("no sweep candidates")
    sched = sched or bundled_schedule()
    spec = ProblemSpec(n)
    losses = {}
    for c in cands:
        cfg = SvmcConfig.at_temperature(temperature_mk, variant="svmc_tf", sweeps_tau=c,
                                        samples=samples, seed=seed)

        def sweep(z, g, cfg=cfg):
            return np.array([_as_populations(run_svmc(spec, sched, AnnealProtocol(1.0, float(s)), z, cfg,
                                                      threads=threads), n) for s in g])

        losses[c] = total_l2(simulated_curves(reference, n, sweep), reference)
    best = min(cands, key=lambda c: (losses[c], cands.index(c)))
    return SweepSelection(best, losses)


# ---------------------------------------------------------------- maximum-spin bound

@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    bound: float
    margin: float       # bound - total


def check_bound(result, initial: int, n: int, tol: float = 1e-9) -> BoundCheck:
    """Spin-conserving dynamics cannot exceed the initial maximum-spin weight 1 / C(N, k).

    `result` is a total success probability or any object with a `total` attribute.
    """
    total = float(getattr(result, "total", result))
    if math.isnan(total):
        raise DomainError("total success probability is NaN")
    bound = max_spin_overlap(initial, n)
    return BoundCheck(total <= bound + tol, bound, bound - total)
