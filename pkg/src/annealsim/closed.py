"""Closed-system Schrodinger propagation of reverse-anneal cycles.

The state is split into total-spin sectors; inside each sector the amplitudes
(2S+1 x d_S matrix) evolve under H_S alone, so only the column space actually
occupied by the initial state is propagated.  Evolution happens in the rotating
instantaneous eigenbasis: diagonal phases are integrated exactly and the
integrator sees only the frame-rotation coupling -ds/dt K.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import FrameTable, IntegratorConfig, InteractionPicture, integrate
from .errors import DomainError, IntegrationError, StiffnessError
from .frames import SectorFrames
from .model import ProblemSpec, driver_matrix, target_diagonal
from .schedule import AnnealProtocol, Schedule, eval_schedule
from .sectors import decomposition

NORM_DRIFT_LIMIT = 1e-6


@dataclass
class PureState:
    amplitudes: np.ndarray
    basis_tag: str = "computational"

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def fidelity(self, other: "PureState") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


def basis_state(n: int, z: int) -> PureState:
    psi = np.zeros(1 << n, dtype=complex)
    psi[z] = 1.0
    return PureState(psi)


class ClosedSolver:
    """Reusable propagator for one (problem, schedule, integrator) combination."""

    def __init__(self, spec: ProblemSpec, sched: Schedule, cfg: IntegratorConfig | None = None):
        self.spec = spec
        self.sched = sched
        self.cfg = cfg or IntegratorConfig()
        self.decomp = decomposition(spec.n_qubits)
        self.frames = SectorFrames(spec, sched, self.decomp.sectors)
        self.table = FrameTable(self.frames, self.cfg.frame_ds)
        self.nfev = 0

    def _reduce(self, psi: np.ndarray):
        """Sector amplitudes -> block-diagonal slot matrix (L x R) and the right factors."""
        amps = self.decomp.to_sectors(psi)
        L = self.frames.size
        cols, rights, owners = [], [], []
        for isec, c in enumerate(amps):
            if not np.any(np.abs(c) > 0):
                rights.append(None)
                continue
            u, sv, vh = np.linalg.svd(c, full_matrices=False)
            r = int(np.sum(sv > 1e-14 * sv[0]))
            q = u[:, :r] * sv[:r]
            o = self.frames.offsets[isec]
            for k in range(r):
                col = np.zeros(L, dtype=complex)
                col[o:o + c.shape[0]] = q[:, k]
                cols.append(col)
                owners.append(isec)
            rights.append(vh[:r])
        return np.array(cols).T, rights, owners

    def _expand(self, slots: np.ndarray, rights, owners) -> np.ndarray:
        amps = []
        col = 0
        for isec, sec in enumerate(self.decomp.sectors):
            if rights[isec] is None:
                amps.append(np.zeros((sec.dim, sec.multiplicity), dtype=complex))
                continue
            r = rights[isec].shape[0]
            o = self.frames.offsets[isec]
            amps.append(slots[o:o + sec.dim, col:col + r] @ rights[isec])
            col += r
        return self.decomp.from_sectors(amps)

    def _branch(self, a: np.ndarray, br) -> np.ndarray:
        ip = InteractionPicture(self.table, br)
        L, R = a.shape
        if ip.rate == 0.0:
            return np.exp(-1j * ip.theta(br.t_end))[:, None] * a
        table, rate = self.table, ip.rate

        def rhs(t, y):
            s = ip.s_at(t)
            ph = np.exp(1j * ip.theta(t))
            k = table.coupling(s)
            return (-rate * ph[:, None] * (k @ (ph.conj()[:, None] * y.reshape(L, R)))).ravel()

        y, nfev = integrate(rhs, br.t_start, br.t_end, a.ravel(), self.cfg)
        self.nfev += nfev
        return np.exp(-1j * ip.theta(br.t_end))[:, None] * y.reshape(L, R)

    def propagate(self, psi0: PureState, proto: AnnealProtocol) -> PureState:
        psi = np.asarray(psi0.amplitudes, dtype=complex)
        if psi.size != self.spec.dim:
            raise DomainError("state dimension does not match the problem size")
        norm0 = np.linalg.norm(psi)
        if abs(norm0 - 1) > 1e-9:
            raise DomainError("initial state must be normalized")
        branches = proto.branches()
        s_min = min(min(b.s_start, b.s_end) for b in branches)
        self.table.extend_to(s_min)
        slots, rights, owners = self._reduce(psi)
        s_begin = branches[0].s_start
        for _ in range(proto.cycles):
            a = self.table.vectors_at(s_begin).T @ slots
            for br in branches:
                a = self._branch(a, br)
            slots = self.table.vectors_at(branches[-1].s_end) @ a
        out = self._expand(slots, rights, owners)
        drift = abs(np.linalg.norm(out) - norm0)
        if drift > NORM_DRIFT_LIMIT:
            raise IntegrationError(f"norm drift {drift:.2e} exceeds {NORM_DRIFT_LIMIT}")
        return PureState(out)


@lru_cache(maxsize=8)
def _solver(spec: ProblemSpec, sched: Schedule, cfg: IntegratorConfig) -> ClosedSolver:
    return ClosedSolver(spec, sched, cfg)


def propagate_cycle(spec: ProblemSpec, sched: Schedule, proto: AnnealProtocol, psi0: PureState,
                    cfg: IntegratorConfig | None = None) -> PureState:
    """One cycle of the protocol (the `cycles` field is ignored)."""
    return _solver(spec, sched, cfg or IntegratorConfig()).propagate(psi0, proto.single())


def propagate_iterated(spec: ProblemSpec, sched: Schedule, proto: AnnealProtocol, psi0: PureState,
                       cfg: IntegratorConfig | None = None) -> PureState:
    """`proto.cycles` consecutive cycles, each seeded by the previous output."""
    return _solver(spec, sched, cfg or IntegratorConfig()).propagate(psi0, proto)


def success_probability(psi: PureState) -> tuple[float, float, float]:
    amp = np.asarray(psi.amplitudes)
    p_up = float(abs(amp[0]) ** 2)
    p_down = float(abs(amp[-1]) ** 2)
    return p_up + p_down, p_up, p_down


def propagate_direct(spec: ProblemSpec, sched: Schedule, proto: AnnealProtocol, psi0: PureState,
                     rtol: float = 1e-11, atol: float = 1e-13) -> PureState:
    """Brute-force reference: i d psi/dt = H(s(t)) psi in the computational basis."""
    drv = driver_matrix(spec).toarray()
    tgt = target_diagonal(spec)
    psi = np.asarray(psi0.amplitudes, dtype=complex)
    for _ in range(proto.cycles):
        for br in proto.branches():
            # split additionally at schedule nodes so each piece has smooth H(t)
            s_pts = np.unique(np.concatenate([[br.s_start, br.s_end], sched.nodes_between(br.s_start, br.s_end)]))
            if br.rate < 0:
                s_pts = s_pts[::-1]
            if br.rate == 0:
                t_pts = [br.t_start, br.t_end]
            else:
                t_pts = br.t_start + (s_pts - br.s_start) / br.rate

            def rhs(t, y, br=br):
                a, b = eval_schedule(sched, br.s_at(min(max(t, br.t_start), br.t_end)))
                return -1j * (0.5 * a * (drv @ y) + 0.5 * b * tgt * y)

            for t0, t1 in zip(t_pts[:-1], t_pts[1:]):
                if t1 <= t0:
                    continue
                sol = solve_ivp(rhs, (t0, t1), psi, method="DOP853", rtol=rtol, atol=atol)
                if sol.status != 0:
                    raise StiffnessError(sol.message)
                psi = sol.y[:, -1]
    return PureState(psi)
