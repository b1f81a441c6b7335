"""Instantaneous eigenframes of the spin-sector Hamiltonians H_S(s).

Each sector block is split by the M -> -M reflection (a symmetry for even p),
so every diagonalized block has a nondegenerate spectrum even where the two
ground states of the p-spin model merge at s -> 1.  All blocks are padded into
one stacked array and diagonalized by a single batched call.

Level layout: sectors in the order given; inside a sector, the even-parity
levels (ascending) followed by the odd-parity levels (ascending).  Vectors are
expressed in the |S, M> slot basis (slot j holds M = S - j), and slots and
levels share the same global offsets.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ProblemSpec
from .schedule import Schedule, eval_schedule
from .sectors import SpinSector, sector_hamiltonian_parts

PAD = 1.0e7


@dataclass
class Frame:
    s: float
    energies: np.ndarray   # (L,)
    vectors: np.ndarray    # (L, L) block diagonal, columns are levels
    coupling: np.ndarray | None = None  # K_ab = <a| d/ds |b>


def parity_transform(dim: int, split: bool) -> tuple[np.ndarray, int]:
    """Orthogonal map from slot basis to (even..., odd...) basis, and the even count."""
    if not split:
        return np.eye(dim), dim
    cols_even, cols_odd = [], []
    for j in range(dim // 2):
        e = np.zeros(dim)
        o = np.zeros(dim)
        e[j] = e[dim - 1 - j] = np.sqrt(0.5)
        o[j] = np.sqrt(0.5)
        o[dim - 1 - j] = -np.sqrt(0.5)
        cols_even.append(e)
        cols_odd.append(o)
    if dim % 2:
        e = np.zeros(dim)
        e[dim // 2] = 1.0
        cols_even.append(e)
    p = np.array(cols_even + cols_odd).T
    return p, len(cols_even)


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """+-1 per column making the largest-magnitude entry positive (lowest index on ties)."""
    mag = np.abs(vectors)
    peak = mag.max(axis=0)
    first = np.argmax(mag >= peak - 1e-12 * np.maximum(peak, 1e-300), axis=0)
    sgn = np.sign(vectors[first, np.arange(vectors.shape[1])])
    sgn[sgn == 0] = 1.0
    return sgn


class SectorFrames:
    """Batched diagonalization of H_S(s) for a list of spin sectors."""

    def __init__(self, spec: ProblemSpec, sched: Schedule, sectors: list[SpinSector]):
        self.spec = spec
        self.sched = sched
        self.sectors = list(sectors)
        split = spec.exponent % 2 == 0
        dims = [sec.dim for sec in self.sectors]
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self.size = int(self.offsets[-1])
        L = self.size
        self.P = np.zeros((L, L))
        self.level_sector = np.zeros(L, dtype=int)
        self.level_parity = np.zeros(L, dtype=int)
        hx_blocks, hz_blocks, sizes, globals_ = [], [], [], []
        for isec, sec in enumerate(self.sectors):
            o = self.offsets[isec]
            dx, dz = sector_hamiltonian_parts(spec.n_qubits, spec.exponent, sec)
            p, n_even = parity_transform(sec.dim, split)
            self.P[o:o + sec.dim, o:o + sec.dim] = p
            hx, hz = p.T @ dx @ p, p.T @ dz @ p
            self.level_sector[o:o + sec.dim] = isec
            self.level_parity[o + n_even:o + sec.dim] = 1
            for lo, hi in ((0, n_even), (n_even, sec.dim)):
                if hi > lo:
                    hx_blocks.append(hx[lo:hi, lo:hi])
                    hz_blocks.append(hz[lo:hi, lo:hi])
                    sizes.append(hi - lo)
                    globals_.append(o + lo)
        nb = len(sizes)
        m = max(sizes)
        self.block_size = m
        self.hx = np.zeros((nb, m, m))
        self.hz = np.zeros((nb, m, m))
        self.pad = np.zeros((nb, m, m))
        valid = np.zeros((nb, m), dtype=bool)
        for b, (x, z, sz) in enumerate(zip(hx_blocks, hz_blocks, sizes)):
            self.hx[b, :sz, :sz] = x
            self.hz[b, :sz, :sz] = z
            self.pad[b, range(sz, m), range(sz, m)] = PAD * (1 + np.arange(m - sz))
            valid[b, :sz] = True
        self.valid = valid
        # global spin-flip parity: on sector k the flip acts as (-1)^k times M -> -M
        self.flip_parity = None
        if split:
            self.flip_parity = self.level_parity ^ (np.array([sec.index for sec in self.sectors])[self.level_sector] % 2)
        # scatter indices: (block, i) -> global level/row in parity basis
        bi, ii = np.nonzero(valid)
        self._bi, self._ii = bi, ii
        self._glob = np.array(globals_)[bi] + ii
        pair = valid[:, :, None] & valid[:, None, :]
        b2, r2, c2 = np.nonzero(pair)
        self._b2, self._r2, self._c2 = b2, r2, c2
        base = np.array(globals_)
        self._gr2 = base[b2] + r2
        self._gc2 = base[b2] + c2

    def labels(self) -> list[tuple[float, int, int]]:
        """(spin, parity, rank within its parity block) for every level."""
        out = []
        for isec, sec in enumerate(self.sectors):
            o = self.offsets[isec]
            for par in (0, 1):
                idx = [g for g in range(o, o + sec.dim) if self.level_parity[g] == par]
                out.extend((sec.spin, par, r) for r in range(len(idx)))
        return out

    def _diag(self, a: float, b: float):
        h = a * self.hx + b * self.hz + self.pad
        w, v = np.linalg.eigh(h)
        return w, v

    def frame(self, s: float, ref: np.ndarray | None = None, coupling: bool = True,
              slopes: tuple[float, float] | None = None) -> Frame:
        """Eigenframe at s; gauge aligned to `ref` columns if given, else canonical."""
        a, b = eval_schedule(self.sched, s)
        w, v = self._diag(a, b)
        L = self.size
        energies = np.empty(L)
        energies[self._glob] = w[self._bi, self._ii]
        vpar = np.zeros((L, L))
        vpar[self._gr2, self._gc2] = v[self._b2, self._r2, self._c2]
        vectors = self.P @ vpar
        if ref is None:
            sgn = canonical_signs(vectors)
        else:
            sgn = np.sign(np.einsum("ij,ij->j", ref, vectors))
            sgn[sgn == 0] = 1.0
        vectors *= sgn
        k = None
        if coupling:
            da, db = slopes if slopes is not None else self.sched.slopes(s)
            dh = da * self.hx + db * self.hz
            num = np.einsum("bji,bjk,bkl->bil", v, dh, v)
            gap = w[:, None, :] - w[:, :, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                kb = np.where(np.abs(gap) > 0, num / gap, 0.0)
            idx = np.arange(self.block_size)
            kb[:, idx, idx] = 0.0
            k = np.zeros((L, L))
            k[self._gr2, self._gc2] = kb[self._b2, self._r2, self._c2]
            k *= sgn[:, None] * sgn[None, :]
        return Frame(s, energies, vectors, k)

    def coupling_fd(self, s: float, delta: float = 1e-6) -> np.ndarray:
        """K by central differences of sign-aligned frames (cross-check of the analytic form)."""
        mid = self.frame(s, coupling=False)
        lo = self.frame(max(s - delta, 0.0), ref=mid.vectors, coupling=False)
        hi = self.frame(min(s + delta, 1.0), ref=mid.vectors, coupling=False)
        return mid.vectors.T @ (hi.vectors - lo.vectors) / (hi.s - lo.s)
