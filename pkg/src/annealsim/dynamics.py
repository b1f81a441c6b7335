"""Shared machinery for time evolution in the rotating instantaneous eigenbasis.

Frames are tabulated on a grid of s values (all schedule nodes plus a uniform
refinement), with the gauge carried continuously from s = 1 downwards.  Between
nodes the Hamiltonian is linear in s, so energies are interpolated by cubic
Hermite polynomials built from Hellmann-Feynman slopes, and the dynamical phase
int E dt is integrated exactly from that interpolant.  The frame-rotation
coupling K = <a|d/ds b> is interpolated linearly.

Equations are integrated in the interaction picture with respect to the
adiabatic phases, so the integrator only resolves the non-adiabatic coupling
and dissipation, never the bare energies.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, StiffnessError
from .frames import Frame, SectorFrames
from .schedule import AnnealProtocol, Branch


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = np.inf
    method: str = "RK45"
    frame_ds: float = 1e-3   # maximal spacing of the frame table in s

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0 and self.frame_ds > 0):
            raise DomainError("integrator tolerances and steps must be positive")


def table_nodes(sched_s: np.ndarray, s_lo: float, s_hi: float, ds: float) -> np.ndarray:
    inner = sched_s[(sched_s > s_lo) & (sched_s < s_hi)]
    pts = np.unique(np.concatenate([[s_lo, s_hi], inner]))
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(np.ceil((b - a) / ds - 1e-9)))
        out.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(out)


class FrameTable:
    """Gauge-continuous eigen-data of all sector blocks on a node grid [s_lo, 1].

    Per node j: energies E[j], vectors V[j] and the coupling K[j] (evaluated with
    slopes averaged across schedule kinks, so K is continuous and piecewise
    linear).  Per interval j = [s_j, s_j+1]: energy slopes at both ends computed
    with that interval's own schedule slopes, giving C^0 cubic Hermite energies
    that are exact to O(ds^4) inside each linear piece of the schedule.
    Extra per-node payloads (e.g. dissipators) are built through `node_hook`.
    """

    def __init__(self, frames: SectorFrames, ds: float = 1e-3, node_hook=None):
        self.frames = frames
        self.ds = ds
        self.node_hook = node_hook
        sched = frames.sched
        f = frames.frame(1.0, slopes=sched.node_slopes(1.0))
        self.nodes = np.array([1.0])
        self.E = f.energies[None, :].copy()
        self.V = f.vectors[None, :, :].copy()
        self.K = f.coupling[None, :, :].copy()
        self.payload = [node_hook(f)] if node_hook else None
        L = frames.size
        self.dE_r = np.zeros((0, L))   # slope at the left end of each interval
        self.dE_l = np.zeros((0, L))   # slope at the right end of each interval
        self.phi = np.zeros((1, L))    # int_{s_lo}^{s_j} E ds

    @property
    def s_lo(self) -> float:
        return float(self.nodes[0])

    def extend_to(self, s_lo: float) -> None:
        """Add nodes below the current lowest node, down to s_lo."""
        if s_lo >= self.s_lo:
            return
        sched = self.frames.sched
        new = table_nodes(sched.s, s_lo, self.s_lo, self.ds)[:-1][::-1]  # descending
        ref = self.V[0]
        Es, Vs, Ks, dEr, dEl, pay = [], [], [], [], [], []
        upper = self.nodes[0]
        f_up = None
        for s in new:
            f_lo = self.frames.frame(s, ref=ref, slopes=sched.node_slopes(s))
            piece = sched.slopes(0.5 * (s + upper))
            if f_up is None:
                f_up = self.frames.frame(upper, ref=ref, coupling=False)
            dEl.append(_hf_diag(self.frames, f_up, piece))
            dEr.append(_hf_diag(self.frames, f_lo, piece))
            Es.append(f_lo.energies)
            Vs.append(f_lo.vectors)
            Ks.append(f_lo.coupling)
            if self.node_hook:
                pay.append(self.node_hook(f_lo))
            ref = f_lo.vectors
            upper = s
            f_up = f_lo
        self.nodes = np.concatenate([new[::-1], self.nodes])
        self.E = np.concatenate([np.array(Es[::-1]), self.E])
        self.V = np.concatenate([np.array(Vs[::-1]), self.V])
        self.K = np.concatenate([np.array(Ks[::-1]), self.K])
        self.dE_r = np.concatenate([np.array(dEr[::-1]), self.dE_r])
        self.dE_l = np.concatenate([np.array(dEl[::-1]), self.dE_l])
        if self.node_hook:
            self.payload = pay[::-1] + self.payload
        h = np.diff(self.nodes)[:, None]
        inc = h * (self.E[:-1] + self.E[1:]) / 2 + h**2 * (self.dE_r - self.dE_l) / 12
        self.phi = np.concatenate([np.zeros((1, self.frames.size)), np.cumsum(inc, axis=0)])

    def locate(self, s: float) -> tuple[int, float]:
        j = int(np.searchsorted(self.nodes, s, side="right")) - 1
        j = min(max(j, 0), self.nodes.size - 2)
        h = self.nodes[j + 1] - self.nodes[j]
        return j, (s - self.nodes[j]) / h

    def _hermite(self, j: int):
        h = self.nodes[j + 1] - self.nodes[j]
        return self.E[j], self.E[j + 1], self.dE_r[j] * h, self.dE_l[j] * h, h

    def energies(self, s: float) -> np.ndarray:
        if self.nodes.size == 1:
            return self.E[0].copy()
        j, x = self.locate(s)
        e0, e1, m0, m1, _ = self._hermite(j)
        x2, x3 = x * x, x * x * x
        return ((2 * x3 - 3 * x2 + 1) * e0 + (x3 - 2 * x2 + x) * m0
                + (-2 * x3 + 3 * x2) * e1 + (x3 - x2) * m1)

    def phase_integral(self, s: float) -> np.ndarray:
        """int_{s_lo}^{s} E(s') ds' for every level."""
        if self.nodes.size == 1:
            return np.zeros(self.frames.size)
        j, x = self.locate(s)
        e0, e1, m0, m1, h = self._hermite(j)
        x2, x3, x4 = x * x, x**3, x**4
        q = ((x4 / 2 - x3 + x) * e0 + (x4 / 4 - 2 * x3 / 3 + x2 / 2) * m0
             + (-x4 / 2 + x3) * e1 + (x4 / 4 - x3 / 3) * m1)
        return self.phi[j] + h * q

    def coupling(self, s: float) -> np.ndarray:
        j, x = self.locate(s)
        return (1 - x) * self.K[j] + x * self.K[j + 1]

    def interp_payload(self, s: float):
        j, x = self.locate(s)
        return j, x

    def vectors_at(self, s: float) -> np.ndarray:
        """Frame vectors at s in the table gauge (nodes exact, else re-diagonalized and aligned)."""
        if self.nodes.size == 1:
            return self.V[0]
        j, x = self.locate(s)
        if x <= 1e-12:
            return self.V[j]
        if x >= 1 - 1e-12:
            return self.V[j + 1]
        ref = self.V[j] if x < 0.5 else self.V[j + 1]
        return self.frames.frame(s, ref=ref, coupling=False).vectors


def _hf_diag(frames: SectorFrames, f: Frame, slopes) -> np.ndarray:
    """dE_a/ds = <a|dH/ds|a> for every level."""
    da, db = slopes
    # rebuild dH in the slot basis block by block
    out = np.empty(frames.size)
    for isec, sec in enumerate(frames.sectors):
        o = frames.offsets[isec]
        sl = slice(o, o + sec.dim)
        dh = frames.P[sl, sl] @ _block_dh(frames, isec, da, db) @ frames.P[sl, sl].T
        v = f.vectors[sl, sl]
        out[sl] = np.einsum("ia,ij,ja->a", v, dh, v)
    return out


def _block_dh(frames: SectorFrames, isec: int, da: float, db: float) -> np.ndarray:
    """dH_S/ds in the parity basis of sector isec."""
    cache = frames.__dict__.setdefault("_parity_parts", {})
    if isec not in cache:
        from .sectors import sector_hamiltonian_parts
        sec = frames.sectors[isec]
        dx, dz = sector_hamiltonian_parts(frames.spec.n_qubits, frames.spec.exponent, sec)
        o = frames.offsets[isec]
        p = frames.P[o:o + sec.dim, o:o + sec.dim]
        cache[isec] = (p.T @ dx @ p, p.T @ dz @ p)
    hx, hz = cache[isec]
    return da * hx + db * hz


def protocol_segments(proto: AnnealProtocol, nodes_s: np.ndarray | None = None) -> list[Branch]:
    """Branches of one cycle (integration restarts exactly at every kink)."""
    return proto.branches()


class InteractionPicture:
    """Adiabatic phases theta_a(t) = int_{t0}^{t} E_a dt along one branch."""

    def __init__(self, table: FrameTable, branch: Branch):
        self.table = table
        self.branch = branch
        self.rate = branch.rate
        self.phi0 = table.phase_integral(branch.s_start)
        if self.rate == 0.0:
            self.e_const = table.energies(branch.s_start)

    def s_at(self, t: float) -> float:
        s = self.branch.s_start + self.rate * (t - self.branch.t_start)
        lo, hi = sorted((self.branch.s_start, self.branch.s_end))
        return min(max(s, lo), hi)

    def theta(self, t: float) -> np.ndarray:
        if self.rate == 0.0:
            return self.e_const * (t - self.branch.t_start)
        return (self.table.phase_integral(self.s_at(t)) - self.phi0) / self.rate


def integrate(rhs, t0: float, t1: float, y0: np.ndarray, cfg: IntegratorConfig):
    sol = solve_ivp(rhs, (t0, t1), y0, method=cfg.method, rtol=cfg.rel_tol, atol=cfg.abs_tol,
                    max_step=cfg.max_step)
    if sol.status != 0:
        raise StiffnessError(f"integration stalled at t={sol.t[-1]:.6g}: {sol.message}")
    return sol.y[:, -1], sol.nfev
