"""The p-spin target Hamiltonian, transverse-field driver and semiclassical energy.

Bit convention: bit i = 1 means spin i points down, so the all-up state is index 0
and the all-down state is index 2^N - 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, DomainError, RangeError
from .schedule import Schedule, eval_schedule

DENSE_MAX_QUBITS = 14
DIAGONAL_MAX_QUBITS = 26


@dataclass(frozen=True)
class ProblemSpec:
    n_qubits: int
    exponent: int = 2

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise DomainError("n_qubits must be a positive integer")
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise DomainError("exponent must be a positive integer")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def up(self) -> int:
        return 0

    @property
    def down(self) -> int:
        return (1 << self.n_qubits) - 1


def parse_state(text: str | int, n: int) -> int:
    """Basis state from a ket label like '0001' (leftmost char = highest bit) or an int."""
    if isinstance(text, (int, np.integer)):
        z = int(text)
    else:
        t = text.strip()
        if t.startswith("0b"):
            t = t[2:]
        if len(t) != n or set(t) - {"0", "1"}:
            raise DomainError(f"state label {text!r} is not an {n}-bit string")
        z = int(t, 2)
    if not 0 <= z < (1 << n):
        raise RangeError(f"basis state {z} out of range for N={n}")
    return z


def popcount(z):
    return np.bitwise_count(np.asarray(z, dtype=np.uint64)).astype(np.int64)


def target_diagonal(spec: ProblemSpec) -> np.ndarray:
    """Dimensionless energies -N m^p of all 2^N basis states."""
    n = spec.n_qubits
    if n > DIAGONAL_MAX_QUBITS:
        raise CapacityError(f"target diagonal limited to N <= {DIAGONAL_MAX_QUBITS}")
    k = popcount(np.arange(1 << n, dtype=np.uint64))
    m = (n - 2 * k) / n
    return -n * m**spec.exponent


def driver_matrix(spec: ProblemSpec) -> sp.csr_matrix:
    """Sparse matrix of -sum_i sigma^x_i."""
    n = spec.n_qubits
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"driver matrix limited to N <= {DENSE_MAX_QUBITS}")
    dim = 1 << n
    z = np.arange(dim)
    rows = np.repeat(z, n)
    cols = (rows ^ np.tile(1 << np.arange(n), dim))
    data = -np.ones(rows.size)
    return sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))


def hamiltonian(spec: ProblemSpec, sched: Schedule, s: float, sparse: bool = False):
    """H(s) = (A/2) H_D + (B/2) H_T in rad/ns."""
    a, b = eval_schedule(sched, s)
    h = 0.5 * a * driver_matrix(spec) + sp.diags(0.5 * b * target_diagonal(spec))
    return h.tocsr() if sparse else h.toarray()


def magnetization(state: int, n: int) -> float:
    k = int(popcount(state))
    return (n - 2 * k) / n


def max_spin_overlap(state: int, n: int) -> float:
    """Weight of a basis state in the maximum total-spin sector, 1 / C(N, k)."""
    return 1.0 / math.comb(n, int(popcount(state)))


def semiclassical_energy(angles, sched: Schedule, s: float, p: int = 2) -> float:
    """Classical rotor energy -(A/2) sum sin - (B N / 2) (mean cos)^p."""
    th = np.asarray(angles, dtype=float)
    a, b = eval_schedule(sched, s)
    n = th.size
    return -0.5 * a * np.sin(th).sum() - 0.5 * b * n * (np.cos(th).sum() / n) ** p


def energy_from_sums(sum_sin, sum_cos, n: int, a: float, b: float, p: int = 2):
    return -0.5 * a * sum_sin - 0.5 * b * n * (sum_cos / n) ** p


def delta_E_single_spin(angles, k: int, theta_new: float, sched: Schedule, s: float,
                        p: int = 2, sums: tuple[float, float] | None = None) -> float:
    """Energy change when spin k is rotated to theta_new.

    With cached (sum sin, sum cos) the cost is O(1); otherwise they are recomputed.
    """
    th = np.asarray(angles, dtype=float)
    n = th.size
    if sums is None:
        sums = (np.sin(th).sum(), np.cos(th).sum())
    a, b = eval_schedule(sched, s)
    return delta_energy(sums[0], sums[1], th[k], theta_new, n, a, b, p)


def delta_energy(sum_sin, sum_cos, theta_old, theta_new, n, a, b, p=2):
    """Vectorized O(1) kernel behind delta_E_single_spin."""
    d_sin = np.sin(theta_new) - np.sin(theta_old)
    d_cos = (np.cos(theta_new) - np.cos(theta_old)) / n
    c_old = sum_cos / n
    c_new = c_old + d_cos
    # x^p - y^p = (x - y) sum_j x^(p-1-j) y^j avoids cancellation for small moves
    geo = sum(c_new ** (p - 1 - j) * c_old**j for j in range(p))
    return -0.5 * a * d_sin - 0.5 * b * n * d_cos * geo
