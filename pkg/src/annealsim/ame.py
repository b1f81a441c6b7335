"""Adiabatic master equation (AME) with an Ohmic bath.

Lindblad operators live in the instantaneous eigenbasis and are grouped by Bohr
frequency (secular approximation):

    d rho/dt = -i[H, rho] + sum_{i, w} gamma(w) (L_iw rho L_iw^+ - 1/2 {L_iw^+ L_iw, rho})

with L_iw = sum_{E_b - E_a = w} <a|sigma^z_i|b> |a><b| for independent dephasing,
or a single family built from S^z = sum_i sigma^z_i for collective dephasing.

Both generators commute with qubit permutations, so the solver evolves the
permutation-averaged state rho = sum_S rho_S (x) 1/d_S, storing one small block
rho_S per total-spin sector.  Every permutation-invariant observable (all-up,
all-down and every excited-level bin) is exact in this representation.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate as sint
from scipy.interpolate import CubicSpline

from .dynamics import FrameTable, IntegratorConfig, InteractionPicture, integrate
from .errors import CapacityError, DomainError, IntegrationError, PhysicalityError
from .frames import Frame, SectorFrames
from .model import ProblemSpec
from .schedule import AnnealProtocol, Schedule, TWO_PI, temperature_to_rate
from .sectors import decomposition, sigma_z_diagonals

BIN_RTOL = 1e-6
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-5
AME_DEFAULT_CFG = IntegratorConfig(rel_tol=1e-6, abs_tol=1e-9)


@dataclass(frozen=True)
class OhmicBath:
    eta_g2: float = 1e-3
    omega_c: float = TWO_PI * 1e3      # rad/ns
    temperature: float = 12.1          # mK

    def __post_init__(self):
        if not (self.eta_g2 >= 0 and self.omega_c > 0 and self.temperature > 0):
            raise DomainError("bath parameters must be positive")

    @property
    def kT(self) -> float:
        return temperature_to_rate(self.temperature)

    @property
    def beta(self) -> float:
        return 1.0 / self.kT


def gamma_ohmic(bath: OhmicBath, omega):
    """Ohmic rate 2 pi eta g^2 w e^{-|w|/w_c} / (1 - e^{-beta w}), KMS by construction."""
    w = np.asarray(omega, dtype=float)
    x = bath.beta * w
    ax = np.abs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        # x / (1 - e^{-x}) written in an overflow-free form for both signs
        core = np.where(ax > 0, ax / -np.expm1(-ax), 1.0)
    core = np.where(x < 0, core * np.exp(-ax), core)
    out = TWO_PI * bath.eta_g2 * bath.kT * core * np.exp(-np.abs(w) / bath.omega_c)
    return float(out) if out.ndim == 0 else out


class CouplingModel(str, enum.Enum):
    INDEPENDENT = "independent"
    COLLECTIVE = "collective"


@dataclass(frozen=True)
class Truncation:
    n_levels: int | None = None   # None keeps every level

    def __post_init__(self):
        if self.n_levels is not None and self.n_levels < 1:
            raise DomainError("n_levels must be positive")


@dataclass
class DensityState:
    """Density matrix in the computational basis (permutation-averaged for solver output).

    `blocks` optionally carries the sector representation rho_S in the |S, M> basis.
    """

    matrix: np.ndarray
    basis_tag: str = "computational"
    blocks: list | None = field(default=None, repr=False)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def populations(self) -> np.ndarray:
        return np.clip(np.diag(self.matrix).real, 0.0, None)


def density_from_state(n: int, z: int) -> DensityState:
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    rho[z, z] = 1.0
    return DensityState(rho)


def success_from_density(rho: DensityState) -> tuple[float, float, float]:
    m = rho.matrix
    p_up = float(m[0, 0].real)
    p_down = float(m[-1, -1].real)
    return p_up + p_down, p_up, p_down


# --------------------------------------------------------------------------------------
# Lamb shift (optional)

@lru_cache(maxsize=8)
def lamb_shift_table(bath: OhmicBath, w_max: float, n: int = 801):
    """S(w) = (1/2pi) P int gamma(x) / (w - x) dx tabulated on [-w_max, w_max]."""
    lo, hi = -60.0 * bath.kT - 2 * w_max, 30.0 * bath.omega_c
    grid = np.linspace(-w_max, w_max, n)
    vals = []
    for w in grid:
        pv, _ = sint.quad(lambda x: gamma_ohmic(bath, x), lo, hi, weight="cauchy", wvar=w, limit=400)
        vals.append(-pv / TWO_PI)
    return CubicSpline(grid, np.array(vals))


# --------------------------------------------------------------------------------------
# Bohr-frequency binning and Lindblad operators in a dense eigenframe

def bohr_bins(freqs: np.ndarray, tol: float, parity: np.ndarray | None = None
              ) -> tuple[np.ndarray, np.ndarray]:
    """Single-linkage clustering of frequencies w[a, b]; returns (bin id per entry, bin mean).

    With `parity` (global spin-flip parity of every level), transitions are only
    binned together when their target levels a share the same parity.  Levels of
    opposite parity are never exactly degenerate for s < 1; their tunnel
    splittings can fall below floating-point resolution, and merging them would
    feed spurious coherence between the two ground states.
    """
    flat = freqs.ravel()
    order = np.argsort(flat, kind="stable")
    srt = flat[order]
    new = np.concatenate([[True], np.diff(srt) > tol])
    ids_sorted = np.cumsum(new) - 1
    ids = np.empty_like(ids_sorted)
    ids[order] = ids_sorted
    counts = np.bincount(ids_sorted)
    means = np.bincount(ids_sorted, weights=srt) / counts
    ids = ids.reshape(freqs.shape)
    if parity is not None:
        ids = 2 * ids + np.asarray(parity, dtype=int)[:, None]
        means = np.repeat(means, 2)
    return ids, means


def lindblad_operators(frame, spec: ProblemSpec, model: CouplingModel | str,
                       trunc: Truncation | None = None) -> list[tuple[float, np.ndarray]]:
    """Bohr-binned jump operators (in the frame's eigenbasis) for a dense eigenframe.

    `frame` must provide `energies` and full-space `vectors` (see spectrum.eigensystem).
    Independent dephasing yields N families (one per qubit, each operator tagged by
    its frequency); collective dephasing yields one family built from S^z.
    """
    model = CouplingModel(model)
    e = np.asarray(frame.energies)
    v = np.asarray(frame.vectors)
    keep = e.size if trunc is None or trunc.n_levels is None else min(trunc.n_levels, e.size)
    e, v = e[:keep], v[:, :keep]
    diags = sigma_z_diagonals(spec.n_qubits, collective=model is CouplingModel.COLLECTIVE)
    freqs = e[None, :] - e[:, None]   # w_ab = E_b - E_a for the jump b -> a
    width = max(e.max() - e.min(), 1e-300)
    parity = getattr(frame, "parity", None)
    ids, means = bohr_bins(freqs, BIN_RTOL * width, None if parity is None else np.asarray(parity)[:keep])
    ops = []
    for d in diags:
        x = v.conj().T @ (d[:, None] * v)
        for b in range(means.size):
            sel = ids == b
            op = np.where(sel, x, 0.0)
            if np.any(np.abs(op) > 0):
                ops.append((float(means[b]), op))
    return ops


# --------------------------------------------------------------------------------------
# Sector-block dissipator

class SectorDissipator:
    """Builds packed superoperators acting on block-diagonal sector density matrices."""

    def __init__(self, frames: SectorFrames, bath: OhmicBath, model: CouplingModel,
                 lamb_shift: bool = False, keep_partials: bool = False):
        self.frames = frames
        self.keep_partials = keep_partials
        self.bath = bath
        self.model = model
        self.lamb_shift = lamb_shift
        n = frames.spec.n_qubits
        dec = decomposition(n)
        diags = sigma_z_diagonals(n, collective=model is CouplingModel.COLLECTIVE)
        weights = dec.coupling_weights(diags)
        L = frames.size
        # pairs (a, c) with a, c in the same sector, ordered by sector then row-major
        pa, pc = [], []
        for isec, sec in enumerate(frames.sectors):
            o = frames.offsets[isec]
            for a in range(o, o + sec.dim):
                for c in range(o, o + sec.dim):
                    pa.append(a)
                    pc.append(c)
        self.pa = np.array(pa)
        self.pc = np.array(pc)
        self.n_pairs = self.pa.size
        self.pair_index = -np.ones((L, L), dtype=int)
        self.pair_index[self.pa, self.pc] = np.arange(self.n_pairs)
        self.couplings = []
        for (ia, ib), (ja, jb, w) in weights.items():
            oa, ob = frames.offsets[ia], frames.offsets[ib]
            na, nb = frames.sectors[ia].dim, frames.sectors[ib].dim
            self.couplings.append((slice(oa, oa + na), slice(ob, ob + nb), oa + ja, ob + jb, w))
        self._ls = None
        if lamb_shift:
            self._ls = lamb_shift_table(bath, 4.0 * frames.spec.n_qubits * 1e3)

    def coupling_tensor(self, vectors: np.ndarray) -> np.ndarray:
        """G[a', b, c', d] = copy-averaged sum_i X^i_{a'b} X^i_{c'd}."""
        L = self.frames.size
        g = np.zeros((L, L, L, L))
        for sa, sb, ra, rb, w in self.couplings:
            ya = vectors[ra, sa]
            yb = vectors[rb, sb]
            g[sa, sb, sa, sb] += np.einsum("ma,mb,mn,nc,nd->abcd", ya, yb, w, ya, yb, optimize=True)
        return g

    def superoperator(self, f: Frame):
        """Packed dissipator at one frame.

        With `keep_partials`, also returns the per-target-level pieces of the
        anticommutator (and Lamb shift) so that a restriction to a subset of
        levels can be rebuilt without recomputing the frame.
        """
        e = f.energies
        g = self.coupling_tensor(f.vectors)
        freqs = e[None, :] - e[:, None]
        width = max(e.max() - e.min(), 1e-300)
        ids, means = bohr_bins(freqs, BIN_RTOL * width, self.frames.flip_parity)
        rate = gamma_ohmic(self.bath, means)[ids]          # (a', b)
        same = ids[:, :, None, None] == ids[None, None, :, :]
        jump = g * rate[:, :, None, None] * same
        pa, pc = self.pa, self.pc
        sup = jump[pa[:, None], pa[None, :], pc[:, None], pc[None, :]].astype(complex if self._ls else float)
        # G[a', b, a', d] summed over a'
        gd = np.einsum("abad->abd", g)
        same2 = ids[:, :, None] == ids[:, None, :]
        part = gd * rate[:, :, None] * same2
        sup -= 0.5 * self._anticomm(part.sum(axis=0))
        part_ls = None
        if self._ls is not None:
            shift = self._ls(means)[ids]
            part_ls = gd * shift[:, :, None] * same2
            sup += -1j * self._comm(part_ls.sum(axis=0))
        if self.keep_partials:
            return sup, part, part_ls
        return sup, None, None

    def restricted(self, payload, active: np.ndarray, idx: np.ndarray) -> np.ndarray:
        """Dissipator with jump operators restricted to `active` levels, on packed pairs idx."""
        sup, part, part_ls = payload
        out = sup[np.ix_(idx, idx)]
        drop = ~active
        if part is None or not drop.any():
            return out
        out = out + 0.5 * self._anticomm(part[drop].sum(axis=0))[np.ix_(idx, idx)]
        if part_ls is not None:
            out = out + 1j * self._comm(part_ls[drop].sum(axis=0))[np.ix_(idx, idx)]
        return out

    def _anticomm(self, m: np.ndarray) -> np.ndarray:
        """Packed superoperator of rho -> m rho + rho m."""
        pa, pc = self.pa, self.pc
        eye = np.eye(m.shape[0])
        return (m[pa[:, None], pa[None, :]] * eye[pc[:, None], pc[None, :]]
                + eye[pa[:, None], pa[None, :]] * m[pc[None, :], pc[:, None]])

    def _comm(self, m: np.ndarray) -> np.ndarray:
        pa, pc = self.pa, self.pc
        eye = np.eye(m.shape[0])
        return (m[pa[:, None], pa[None, :]] * eye[pc[:, None], pc[None, :]]
                - eye[pa[:, None], pa[None, :]] * m[pc[None, :], pc[:, None]])


# --------------------------------------------------------------------------------------
# Evolution

class AmeSolver:
    """Reusable AME propagator for one (problem, schedule, bath, coupling) combination."""

    def __init__(self, spec: ProblemSpec, sched: Schedule, bath: OhmicBath,
                 model: CouplingModel | str = CouplingModel.INDEPENDENT,
                 trunc: Truncation | None = None, cfg: IntegratorConfig | None = None,
                 lamb_shift: bool = False):
        model = CouplingModel(model)
        self.spec, self.sched, self.bath, self.model = spec, sched, bath, model
        self.trunc = trunc or Truncation()
        if self.trunc.n_levels is not None and self.trunc.n_levels > spec.dim:
            raise CapacityError("n_levels exceeds the Hilbert-space dimension")
        self.cfg = cfg or AME_DEFAULT_CFG
        self.decomp = decomposition(spec.n_qubits)
        self.frames = SectorFrames(spec, sched, self.decomp.sectors)
        self.diss = SectorDissipator(self.frames, bath, model, lamb_shift,
                                     keep_partials=self.trunc.n_levels is not None)
        self.table = FrameTable(self.frames, self.cfg.frame_ds, node_hook=self.diss.superoperator)
        self._dstack = None
        self.nfev = 0

    # -- conversions -------------------------------------------------------------------
    def to_blocks(self, rho: np.ndarray) -> np.ndarray:
        """Copy-traced sector blocks in the slot basis, packed."""
        L = self.frames.size
        full = np.zeros((L, L), dtype=complex)
        dec = self.decomp
        for isec, (sec, vecs) in enumerate(zip(dec.sectors, dec.blocks)):
            o = self.frames.offsets[isec]
            for j in range(sec.dim):
                rj = dec.states[sec.index + j]
                for k in range(sec.dim):
                    rk = dec.states[sec.index + k]
                    full[o + j, o + k] = np.einsum("ia,ij,ja->", vecs[j], rho[np.ix_(rj, rk)], vecs[k])
        return full

    def from_blocks(self, full: np.ndarray) -> np.ndarray:
        dec = self.decomp
        dim = self.spec.dim
        rho = np.zeros((dim, dim), dtype=complex)
        for isec, (sec, vecs) in enumerate(zip(dec.sectors, dec.blocks)):
            o = self.frames.offsets[isec]
            for j in range(sec.dim):
                rj = dec.states[sec.index + j]
                for k in range(sec.dim):
                    rk = dec.states[sec.index + k]
                    c = full[o + j, o + k] / sec.multiplicity
                    if c != 0:
                        rho[np.ix_(rj, rk)] += c * (vecs[j] @ vecs[k].T)
        return rho

    # -- truncation ----------------------------------------------------------------------
    def _active_levels(self, j_lo: int, j_hi: int, rho_eig: np.ndarray) -> np.ndarray:
        """Levels kept on table nodes j_lo..j_hi (whole multiplets, populated levels kept)."""
        L = self.frames.size
        if self.trunc.n_levels is None:
            return np.ones(L, dtype=bool)
        mult = np.array([self.frames.sectors[s].multiplicity for s in self.frames.level_sector])
        active = np.zeros(L, dtype=bool)
        for j in range(j_lo, j_hi + 1):
            order = np.argsort(self.table.E[j], kind="stable")
            cum = np.cumsum(mult[order])
            n_take = int(np.searchsorted(cum, self.trunc.n_levels)) + 1
            active[order[:n_take]] = True
        pops = np.abs(np.diag(rho_eig))
        active |= pops >= 1e-10
        return active

    # -- dynamics ------------------------------------------------------------------------
    def _branch(self, rho: np.ndarray, br) -> np.ndarray:
        """Evolve eigenbasis block matrix rho (L x L) along one branch.

        Inside the branch the state is held in the interaction picture referred
        to the branch start, across truncation chunks.
        """
        table = self.table
        ip = InteractionPicture(table, br)
        rate = ip.rate
        j0, _ = table.locate(min(br.s_start, br.s_end))
        j1, x1 = table.locate(max(br.s_start, br.s_end))
        if x1 > 0:
            j1 += 1
        chunks = [(br.t_start, br.t_end)]
        if self.trunc.n_levels is not None and rate != 0.0:
            # re-select the active set every ~10 table nodes
            n_chunks = max(1, int(np.ceil((j1 - j0) / 10)))
            ts = np.linspace(br.t_start, br.t_end, n_chunks + 1)
            chunks = list(zip(ts[:-1], ts[1:]))
        y_full = rho
        for t0, t1 in chunks:
            s0, s1 = ip.s_at(t0), ip.s_at(t1)
            ja, _ = table.locate(min(s0, s1))
            jb, xb = table.locate(max(s0, s1))
            active = self._active_levels(ja, jb + (1 if xb > 0 else 0), y_full)
            dropped = ~active
            lost = float(np.abs(np.diag(y_full))[dropped].sum()) if dropped.any() else 0.0
            if lost > 1e-10:
                raise IntegrationError(f"truncation would discard population {lost:.2e}")
            y_full = self._chunk(y_full, ip, t0, t1, active)
        th = ip.theta(br.t_end)
        return np.exp(-1j * th)[:, None] * y_full * np.exp(1j * th)[None, :]

    def _chunk(self, rho_i, ip, t0, t1, active):
        """Integrate the interaction-picture block matrix over [t0, t1] on active levels.

        rho_i is in the interaction picture referred to the branch start.
        """
        diss = self.diss
        sel = active[diss.pa] & active[diss.pc]
        idx = np.nonzero(sel)[0]
        pa, pc = diss.pa[idx], diss.pc[idx]
        L = self.frames.size
        table = self.table
        s0, s1 = sorted((ip.s_at(t0), ip.s_at(t1)))
        j_lo, _ = table.locate(s0)
        j_hi, _ = table.locate(s1)
        j_hi = min(j_hi + 1, table.nodes.size - 1)
        dstack = self._dstack_for(active, idx, j_lo, j_hi)
        rate = ip.rate
        y0 = rho_i[pa, pc].astype(complex)

        def rhs(t, y):
            s = ip.s_at(t)
            j, x = table.locate(s)
            th = ip.theta(t)
            php = np.exp(1j * (th[pa] - th[pc]))
            d = (1 - x) * dstack[j - j_lo] + x * dstack[j + 1 - j_lo]
            out = php * (d @ (php.conj() * y))
            if rate != 0.0:
                ph = np.exp(1j * th)
                k = (1 - x) * table.K[j] + x * table.K[j + 1]
                ki = ph[:, None] * k * ph.conj()[None, :]
                r = np.zeros((L, L), dtype=complex)
                r[pa, pc] = y
                comm = ki @ r - r @ ki
                out -= rate * comm[pa, pc]
            return out

        y, nfev = integrate(rhs, t0, t1, y0, self.cfg)
        self.nfev += nfev
        out = np.zeros((L, L), dtype=complex)
        out[pa, pc] = y
        return out

    def _dstack_for(self, active, idx, j_lo, j_hi):
        payload = self.table.payload[j_lo:j_hi + 1]
        if idx.size == self.diss.n_pairs:
            key = (self.table.nodes.size,)
            if self._dstack is None or self._dstack[0] != key:
                self._dstack = (key, np.array([p[0] for p in self.table.payload]))
            return self._dstack[1][j_lo:j_hi + 1]
        return np.array([self.diss.restricted(p, active, idx) for p in payload])

    def evolve(self, rho0: DensityState, proto: AnnealProtocol) -> DensityState:
        m0 = np.asarray(rho0.matrix, dtype=complex)
        if m0.shape != (self.spec.dim, self.spec.dim):
            raise DomainError("density matrix dimension does not match the problem size")
        tr0 = np.trace(m0).real
        branches = proto.branches()
        self.table.extend_to(min(min(b.s_start, b.s_end) for b in branches))
        slots = self.to_blocks(m0)
        s_begin, s_end = branches[0].s_start, branches[-1].s_end
        for _ in range(proto.cycles):
            v = self.table.vectors_at(s_begin)
            rho = v.T @ slots @ v
            for br in branches:
                rho = self._branch(rho, br)
            v = self.table.vectors_at(s_end)
            slots = v @ rho @ v.T
            self._check(slots, tr0)
        return DensityState(self.from_blocks(slots), "computational", blocks=self._split(slots))

    def _split(self, full):
        out = []
        for isec, sec in enumerate(self.frames.sectors):
            o = self.frames.offsets[isec]
            out.append(full[o:o + sec.dim, o:o + sec.dim].copy())
        return out

    def _check(self, slots: np.ndarray, tr0: float) -> None:
        tr = np.trace(slots).real
        if abs(tr - tr0) > TRACE_TOL:
            raise IntegrationError(f"trace drift {abs(tr - tr0):.2e}")
        for blk in self._split(slots):
            if blk.size:
                herm = 0.5 * (blk + blk.conj().T)
                if np.linalg.eigvalsh(herm).min() < -POSITIVITY_TOL:
                    raise PhysicalityError("density matrix lost positivity")


@lru_cache(maxsize=8)
def _solver(spec, sched, bath, model, trunc, cfg, lamb_shift) -> AmeSolver:
    return AmeSolver(spec, sched, bath, model, trunc, cfg, lamb_shift)


def evolve_ame(spec: ProblemSpec, sched: Schedule, proto: AnnealProtocol, rho0: DensityState,
               bath: OhmicBath, model: CouplingModel | str = CouplingModel.INDEPENDENT,
               trunc: Truncation | None = None, cfg: IntegratorConfig | None = None,
               lamb_shift: bool = False) -> DensityState:
    """Evolve rho0 through `proto.cycles` cycles; returns the permutation-averaged state."""
    solver = _solver(spec, sched, bath, CouplingModel(model), trunc or Truncation(),
                     cfg or AME_DEFAULT_CFG, lamb_shift)
    return solver.evolve(rho0, proto)


def evolve_ame_dense(spec: ProblemSpec, sched: Schedule, proto: AnnealProtocol, rho0: DensityState,
                     bath: OhmicBath, model: CouplingModel | str = CouplingModel.INDEPENDENT,
                     rtol: float = 1e-9, atol: float = 1e-11) -> DensityState:
    """Reference AME on the full Hilbert space in the computational basis (small N only).

    Re-diagonalizes H(s) at every right-hand-side call; no tables, sectors or
    interaction picture are involved.
    """
    from .model import hamiltonian
    from .spectrum import eigensystem

    model = CouplingModel(model)
    diags = sigma_z_diagonals(spec.n_qubits, collective=model is CouplingModel.COLLECTIVE)
    dim = spec.dim
    rho = np.asarray(rho0.matrix, dtype=complex).copy()

    def generator(s):
        f = eigensystem(spec, sched, s)
        h = hamiltonian(spec, sched, s)
        e, u = f.energies, f.vectors
        freqs = e[None, :] - e[:, None]
        ids, means = bohr_bins(freqs, BIN_RTOL * max(e.max() - e.min(), 1e-300), f.parity)
        rate = gamma_ohmic(bath, means)[ids]
        same = ids[:, :, None, None] == ids[None, None, :, :]
        t = np.zeros((dim,) * 4)
        for d in diags:
            x = u.T @ (d[:, None] * u)
            t += np.einsum("ab,cd->abcd", x, x)
        jump = t * rate[:, :, None, None] * same
        gamma = np.einsum("abad->bd", jump)
        return h, u, jump, gamma

    for _ in range(proto.cycles):
        for br in proto.branches():
            s_pts = np.unique(np.concatenate([[br.s_start, br.s_end],
                                              sched.nodes_between(br.s_start, br.s_end)]))
            if br.rate < 0:
                s_pts = s_pts[::-1]
            t_pts = [br.t_start, br.t_end] if br.rate == 0 else br.t_start + (s_pts - br.s_start) / br.rate

            def rhs(t, y, br=br):
                s = br.s_at(min(max(t, br.t_start), br.t_end))
                h, u, jump, gamma = generator(s)
                r = y.reshape(dim, dim)
                re = u.T @ r @ u
                de = np.einsum("abcd,bd->ac", jump, re) - 0.5 * (gamma @ re + re @ gamma)
                out = -1j * (h @ r - r @ h) + u @ de @ u.T
                return out.ravel()

            for t0, t1 in zip(t_pts[:-1], t_pts[1:]):
                if t1 <= t0:
                    continue
                sol = sint.solve_ivp(rhs, (t0, t1), rho.ravel(), method="DOP853", rtol=rtol, atol=atol)
                if sol.status != 0:
                    raise IntegrationError(sol.message)
                rho = sol.y[:, -1].reshape(dim, dim)
    return DensityState(rho)
