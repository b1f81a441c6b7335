"""Total-spin (Schur) decomposition of the N-qubit Hilbert space.

H(s) commutes with every qubit permutation, so it is block diagonal in a basis
|S, M, alpha> where alpha labels the d_S equivalent copies of the spin-S irrep:
H = sum_S H_S (x) 1_{d_S}.  The dynamics solvers work with the (2S+1)-dimensional
blocks H_S, which for the p-spin model read

    H_S(s) = -A(s) S_x - (B(s) N / 2) (2 S_z / N)^p.

Basis vectors are built numerically: highest-weight states span the kernel of
S_+ inside a fixed-popcount subspace and the rest of each multiplet follows from
S_- with Condon-Shortley phases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .errors import CapacityError
from .model import DENSE_MAX_QUBITS, popcount


@dataclass(frozen=True)
class SpinSector:
    """Irrep of total spin S = twice_spin / 2 appearing `multiplicity` times."""

    index: int          # popcount of the highest-weight state
    twice_spin: int
    multiplicity: int

    @property
    def spin(self) -> float:
        return self.twice_spin / 2

    @property
    def dim(self) -> int:
        return self.twice_spin + 1

    @property
    def m_values(self) -> np.ndarray:
        """M = S, S-1, ..., -S (slot j holds M = S - j)."""
        return self.spin - np.arange(self.dim)


def sector_list(n: int) -> list[SpinSector]:
    out = []
    for k in range(n // 2 + 1):
        d = math.comb(n, k) - (math.comb(n, k - 1) if k > 0 else 0)
        out.append(SpinSector(k, n - 2 * k, d))
    return out


def spin_operators(sector: SpinSector) -> tuple[np.ndarray, np.ndarray]:
    """(S_x, M) for one irrep in the |S, M> basis ordered M = S..-S."""
    spin = sector.spin
    m = sector.m_values
    # <M-1|S_-|M> = sqrt(S(S+1) - M(M-1))
    low = np.sqrt(np.maximum(spin * (spin + 1) - m[:-1] * (m[:-1] - 1), 0.0))
    sx = 0.5 * (np.diag(low, -1) + np.diag(low, 1))
    return sx, m


def sector_hamiltonian_parts(n: int, p: int, sector: SpinSector) -> tuple[np.ndarray, np.ndarray]:
    """H_S = A * dx + B * dz with dx = -S_x and dz = diag(-(N/2)(2M/N)^p)."""
    sx, m = spin_operators(sector)
    dz = -0.5 * n * (2.0 * m / n) ** p
    return -sx, np.diag(dz)


class SpinDecomposition:
    """Numerical Schur basis of N qubits (N <= 14)."""

    def __init__(self, n: int):
        if n > DENSE_MAX_QUBITS:
            raise CapacityError(f"spin decomposition limited to N <= {DENSE_MAX_QUBITS}")
        self.n = n
        self.sectors = sector_list(n)
        idx = np.arange(1 << n, dtype=np.int64)
        pc = popcount(idx)
        self.states = [idx[pc == k] for k in range(n + 1)]
        self._pos = np.empty(1 << n, dtype=np.int64)
        for st in self.states:
            self._pos[st] = np.arange(st.size)
        self.blocks = self._build()

    def _lowering(self, k: int) -> np.ndarray:
        """Dense S_- from popcount k to k+1, entries 1 where one up spin flips down."""
        src = self.states[k]
        dst = self.states[k + 1]
        mat = np.zeros((dst.size, src.size))
        for i in range(self.n):
            bit = 1 << i
            sel = (src & bit) == 0
            mat[self._pos[src[sel] | bit], np.nonzero(sel)[0]] = 1.0
        return mat

    def _build(self) -> list[list[np.ndarray]]:
        lower = [self._lowering(k) for k in range(self.n)]
        blocks = []
        for sec in self.sectors:
            k = sec.index
            if k == 0:
                top = np.ones((1, 1))
            else:
                # S_+ = S_-^T between popcounts k and k-1
                top = sla.null_space(lower[k - 1].T)
            vecs = [top]
            spin = sec.spin
            for j in range(sec.twice_spin):
                m = spin - j
                nxt = lower[k + j] @ vecs[-1] / math.sqrt(spin * (spin + 1) - m * (m - 1))
                vecs.append(nxt)
            blocks.append(vecs)
        return blocks

    def popcount_of(self, sector: int, slot: int) -> int:
        return self.sectors[sector].index + slot

    def to_sectors(self, psi: np.ndarray) -> list[np.ndarray]:
        """Amplitudes C_S[j, alpha] = <S, S-j, alpha|psi> for every sector."""
        out = []
        for sec, vecs in zip(self.sectors, self.blocks):
            rows = [vecs[j].T @ psi[self.states[sec.index + j]] for j in range(sec.dim)]
            out.append(np.array(rows))
        return out

    def from_sectors(self, amps: list[np.ndarray]) -> np.ndarray:
        psi = np.zeros(1 << self.n, dtype=np.result_type(*amps, float))
        for sec, vecs, c in zip(self.sectors, self.blocks, amps):
            for j in range(sec.dim):
                psi[self.states[sec.index + j]] += vecs[j] @ c[j]
        return psi

    def basis_matrix(self) -> np.ndarray:
        """Orthogonal 2^N x 2^N matrix; columns ordered by (sector, copy, slot)."""
        dim = 1 << self.n
        u = np.zeros((dim, dim))
        col = 0
        for sec, vecs in zip(self.sectors, self.blocks):
            for a in range(sec.multiplicity):
                for j in range(sec.dim):
                    u[self.states[sec.index + j], col] = vecs[j][:, a]
                    col += 1
        return u

    def coupling_weights(self, diagonals: list[np.ndarray]) -> dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Copy-averaged squared matrix elements of diagonal coupling operators.

        For sectors (S', S) and common magnetization values M, M'':
            W(M, M'') = (1/d_S) sum_ops sum_{alpha', beta} Z_M[alpha', beta] Z_M''[alpha', beta]
        with Z_M = <S' M alpha'| op |S M beta>.  Returns {(S' index, S index): (slots', slots, W)}.
        Only nonzero blocks are stored.
        """
        out = {}
        secs = self.sectors
        for ia, sa in enumerate(secs):
            for ib, sb in enumerate(secs):
                mmax = min(sa.spin, sb.spin)
                ms = np.arange(mmax, -mmax - 1, -1.0)
                ja = np.rint(sa.spin - ms).astype(int)
                jb = np.rint(sb.spin - ms).astype(int)
                zs = []
                for op in diagonals:
                    per_m = []
                    for x, y in zip(ja, jb):
                        k = sa.index + x
                        d = op[self.states[k]]
                        per_m.append(self.blocks[ia][x].T @ (d[:, None] * self.blocks[ib][y]))
                    zs.append(np.array(per_m))
                w = sum(np.einsum("mab,nab->mn", z, z) for z in zs) / sb.multiplicity
                if np.max(np.abs(w)) > 1e-12:
                    out[(ia, ib)] = (ja, jb, w)
        return out

    def sector_populations(self, psi: np.ndarray) -> np.ndarray:
        return np.array([np.vdot(c, c).real for c in self.to_sectors(psi)])


@lru_cache(maxsize=16)
def decomposition(n: int) -> SpinDecomposition:
    return SpinDecomposition(n)


def sigma_z_diagonals(n: int, collective: bool = False) -> list[np.ndarray]:
    z = np.arange(1 << n, dtype=np.int64)
    ops = [1.0 - 2.0 * ((z >> i) & 1) for i in range(n)]
    if collective:
        return [np.sum(ops, axis=0)]
    return ops
