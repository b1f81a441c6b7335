"""Instantaneous spectra of H(s), gap profiles and gap-scaling fits."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CapacityError, InsufficientData
from .frames import canonical_signs
from .model import DENSE_MAX_QUBITS, ProblemSpec, hamiltonian
from .schedule import Schedule, eval_schedule
from .sectors import SpinSector, sector_hamiltonian_parts

SECTOR_MAX_QUBITS = 64
GAP_XATOL = 1e-6


@dataclass
class EigenFrame:
    s: float
    energies: np.ndarray          # ascending
    vectors: np.ndarray           # columns, gauge-fixed
    parity: np.ndarray | None = None   # global spin-flip parity per level (even p)
    basis: str = "computational"  # or "max_spin" (|S=N/2, M> with M = N/2 .. -N/2)


def max_spin_sector(n: int) -> SpinSector:
    return SpinSector(0, n, 1)


def flip_parity_basis(n: int) -> tuple[np.ndarray, int]:
    """Orthogonal basis (even..., odd...) of the global spin flip z -> ~z, and the even count."""
    dim = 1 << n
    mask = dim - 1
    lo = np.arange(dim)
    lo = lo[lo < (lo ^ mask)]
    q = np.zeros((dim, dim))
    r = np.sqrt(0.5)
    ne = lo.size
    q[lo, np.arange(ne)] = r
    q[lo ^ mask, np.arange(ne)] = r
    q[lo, ne + np.arange(ne)] = r
    q[lo ^ mask, ne + np.arange(ne)] = -r
    return q, ne


def _sorted_frame(s, e, v, parity, basis, ref):
    order = np.argsort(e, kind="stable")
    e, v = e[order], v[:, order]
    parity = None if parity is None else parity[order]
    if ref is None:
        v = v * canonical_signs(v)
    else:
        sgn = np.sign(np.einsum("ij,ij->j", ref, v))
        sgn[sgn == 0] = 1.0
        v = v * sgn
    return EigenFrame(float(s), e, v, parity, basis)


def eigensystem(spec: ProblemSpec, sched: Schedule, s: float, restrict: bool = False,
                ref: np.ndarray | None = None) -> EigenFrame:
    """Full spectrum (dense, N <= 14) or the maximum-spin block (N <= 64).

    For even p the dense path diagonalizes the two spin-flip parity blocks
    separately, so nearly degenerate doublets are returned as parity eigenstates.
    `ref` aligns column signs with a previous frame instead of the canonical gauge.
    """
    n = spec.n_qubits
    if restrict:
        if n > SECTOR_MAX_QUBITS:
            raise CapacityError(f"sector-restricted spectra limited to N <= {SECTOR_MAX_QUBITS}")
        a, b = eval_schedule(sched, s)
        dx, dz = sector_hamiltonian_parts(n, spec.exponent, max_spin_sector(n))
        e, v = np.linalg.eigh(a * dx + b * dz)
        parity = None
        if spec.exponent % 2 == 0:
            # the global flip maps the symmetric state |M> to |-M> (slot j -> n - j)
            parity = (np.einsum("ja,ja->a", v, v[::-1]) < 0).astype(int)
        return _sorted_frame(s, e, v, parity, "max_spin", ref)
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"dense spectra limited to N <= {DENSE_MAX_QUBITS}; use restrict=True")
    h = hamiltonian(spec, sched, s)
    if spec.exponent % 2:
        e, v = np.linalg.eigh(h)
        return _sorted_frame(s, e, v, None, "computational", ref)
    q, ne = flip_parity_basis(n)
    hq = q.T @ h @ q
    ee, ve = np.linalg.eigh(hq[:ne, :ne])
    eo, vo = np.linalg.eigh(hq[ne:, ne:])
    e = np.concatenate([ee, eo])
    v = np.concatenate([q[:, :ne] @ ve, q[:, ne:] @ vo], axis=1)
    parity = np.concatenate([np.zeros(ne, dtype=int), np.ones(eo.size, dtype=int)])
    return _sorted_frame(s, e, v, parity, "computational", ref)


def sector_gap(spec: ProblemSpec, sched: Schedule, s: float) -> float:
    """Delta_20(s) = e_2 - e_0 inside the maximum-spin sector."""
    a, b = eval_schedule(sched, s)
    dx, dz = sector_hamiltonian_parts(spec.n_qubits, spec.exponent, max_spin_sector(spec.n_qubits))
    e = np.linalg.eigvalsh(a * dx + b * dz)
    return float(e[2] - e[0])


@dataclass
class GapReport:
    n_qubits: int
    delta: float
    s_delta: float
    profile: np.ndarray = field(repr=False)   # rows (s, Delta_20(s))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "gap_radns"])
        for s, g in self.profile:
            w.writerow([f"{s:.6f}", f"{g:.12g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "delta_radns": self.delta,
                           "s_delta": self.s_delta,
                           "profile": [[float(s), float(g)] for s, g in self.profile]}, indent=2)


def gap_profile(spec: ProblemSpec, sched: Schedule, s_grid=None) -> GapReport:
    """Delta_20 on a grid plus the refined minimum (bounded Brent search around the coarse minimum)."""
    if spec.n_qubits < 2:
        raise CapacityError("the gap Delta_20 needs at least two qubits")
    grid = np.linspace(0.0, 1.0, 201) if s_grid is None else np.asarray(s_grid, dtype=float)
    gaps = np.array([sector_gap(spec, sched, s) for s in grid])
    i = int(np.argmin(gaps))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    s_min, g_min = float(grid[i]), float(gaps[i])
    if hi > lo:
        res = minimize_scalar(lambda s: sector_gap(spec, sched, s), bounds=(lo, hi), method="bounded",
                              options={"xatol": GAP_XATOL})
        if res.fun < g_min:
            s_min, g_min = float(res.x), float(res.fun)
    return GapReport(spec.n_qubits, g_min, s_min, np.column_stack([grid, gaps]))


def gap_scaling_fit(reports: list[GapReport]) -> float:
    """Least-squares slope of log(Delta) against log(N)."""
    if len(reports) < 3:
        raise InsufficientData("a scaling fit needs at least three sizes")
    n = np.array([r.n_qubits for r in reports], dtype=float)
    d = np.array([r.delta for r in reports], dtype=float)
    slope, _ = np.polyfit(np.log(n), np.log(d), 1)
    return float(slope)
