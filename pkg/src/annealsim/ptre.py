"""Polaron-transformed Redfield equation in its diagonal (Pauli) form.

In the polaron frame the system Hamiltonian (B/2) H_T is diagonal in the
computational basis and the transverse field only enters the jump operators
(A/2) sigma_i^+-.  Diagonal initial states therefore stay diagonal and the
populations obey dp/dt = T(s) p, where T connects states one bit flip apart:

    T_ab = gamma_p(w_b - w_a) Z_ab,   Z_ab = A(s)^2 |<a|sigma_i^+-|b>|^2 / 4,

with w_a = (B/2) E_T(a) and a hybrid noise spectrum gamma_p (Gaussian
low-frequency MRT component convolved with an Ohmic high-frequency one).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy import integrate as sint
from scipy.interpolate import CubicSpline

from .ame import OhmicBath, gamma_ohmic
from .dynamics import IntegratorConfig
from .errors import CapacityError, DomainError, PhysicalityError, QuadratureError, StiffnessError
from .model import ProblemSpec, target_diagonal
from .schedule import AnnealProtocol, Schedule, TWO_PI, eval_schedule, temperature_to_rate

log = logging.getLogger(__name__)

PTRE_MAX_QUBITS = 24
TABLE_POINTS = 4001
NEGATIVE_LIMIT = 1e-8
CLAMP_LIMIT = 1e-12
PTRE_DEFAULT_CFG = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-12, method="BDF")


@dataclass(frozen=True)
class HybridSpectrum:
    """Low-frequency Gaussian (W, eps_L) plus Ohmic (eta g^2, omega_c) noise at one temperature.

    Supply exactly one of W or eps_L (both rad/ns); the other follows from W^2 = 2 eps_L k_B T.
    """

    temperature: float                 # mK
    eta_g2: float
    omega_c: float = TWO_PI * 1e3      # rad/ns
    W: float | None = None             # rad/ns
    eps_L: float | None = None         # rad/ns

    def __post_init__(self):
        if (self.W is None) == (self.eps_L is None):
            raise DomainError("supply exactly one of W and eps_L")
        if not (self.temperature > 0 and self.eta_g2 > 0 and self.omega_c > 0):
            raise DomainError("temperature, eta_g2 and omega_c must be positive")
        kT = temperature_to_rate(self.temperature)
        if self.W is None:
            if not self.eps_L > 0:
                raise DomainError("eps_L must be positive")
            object.__setattr__(self, "W", float(np.sqrt(2.0 * self.eps_L * kT)))
        else:
            if not self.W > 0:
                raise DomainError("W must be positive")
            object.__setattr__(self, "eps_L", float(self.W**2 / (2.0 * kT)))

    @classmethod
    def from_lab_units(cls, w_mk: float, temperature_mk: float, eta_g2: float,
                       cutoff_thz: float = 1.0) -> "HybridSpectrum":
        """W and T in mK (energy units k_B * mK), cutoff f_c in THz."""
        return cls(temperature=temperature_mk, eta_g2=eta_g2, omega_c=TWO_PI * 1e3 * cutoff_thz,
                   W=temperature_to_rate(w_mk))

    @property
    def kT(self) -> float:
        return temperature_to_rate(self.temperature)

    @property
    def beta(self) -> float:
        return 1.0 / self.kT

    @property
    def bath(self) -> OhmicBath:
        return OhmicBath(self.eta_g2, self.omega_c, self.temperature)


def g_low(spec: HybridSpectrum, omega):
    """sqrt(pi / (2 W^2)) exp(-(w - 4 eps_L)^2 / (8 W^2))."""
    w = np.asarray(omega, dtype=float)
    out = np.sqrt(np.pi / (2.0 * spec.W**2)) * np.exp(-(w - 4.0 * spec.eps_L) ** 2 / (8.0 * spec.W**2))
    return float(out) if out.ndim == 0 else out


def g_high(spec: HybridSpectrum, omega):
    """4 gamma(w) / (w^2 + 4 gamma(0)^2) with the Ohmic gamma of the same bath."""
    bath = spec.bath
    g0 = gamma_ohmic(bath, 0.0)
    w = np.asarray(omega, dtype=float)
    out = 4.0 * gamma_ohmic(bath, w) / (w**2 + 4.0 * g0**2)
    return float(out) if out.ndim == 0 else out


def _support(spec: HybridSpectrum, omega: float) -> float:
    return max(10.0 * spec.omega_c, abs(omega) + 4.0 * spec.eps_L + 10.0 * spec.W)


def gamma_p(spec: HybridSpectrum, omega: float, epsrel: float = 1e-10, epsabs: float = 1e-15) -> float:
    """(1/2 pi) int G_L(w - x) G_H(x) dx by adaptive quadrature, split at both peaks."""
    big = _support(spec, omega)
    centre = omega - 4.0 * spec.eps_L
    g0 = gamma_ohmic(spec.bath, 0.0)
    # breakpoints: Lorentzian core of G_H at 0, Gaussian core of G_L at w - 4 eps_L
    pts = sorted({-big, big, 0.0, -20 * g0, 20 * g0, centre - 12 * spec.W, centre,
                  centre + 12 * spec.W, -spec.omega_c, spec.omega_c})
    pts = [p for p in pts if -big <= p <= big]

    def f(x):
        return g_low(spec, omega - x) * g_high(spec, x)

    total, err = 0.0, 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        val, e, *_ = sint.quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=500, full_output=1)
        total += val
        err += e
    if not np.isfinite(total) or err > 1e-8 * abs(total) + 1e-13:
        raise QuadratureError(f"gamma_p quadrature did not converge at w={omega} (err {err:.2e})")
    return total / TWO_PI


def _gamma_p_vector(spec: HybridSpectrum, omegas: np.ndarray) -> np.ndarray:
    """gamma_p on many frequencies at once (one vector-valued adaptive quadrature)."""
    big = _support(spec, float(np.abs(omegas).max()))
    g0 = gamma_ohmic(spec.bath, 0.0)
    lo_c = float(omegas.min()) - 4.0 * spec.eps_L - 12 * spec.W
    hi_c = float(omegas.max()) - 4.0 * spec.eps_L + 12 * spec.W
    pts = sorted({-big, big, 0.0, -20 * g0, 20 * g0, lo_c, hi_c, -spec.omega_c, spec.omega_c})
    pts = [p for p in pts if -big <= p <= big]

    def f(x):
        return g_low(spec, omegas - x) * g_high(spec, x)

    total = np.zeros_like(omegas)
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, err = sint.quad_vec(f, lo, hi, epsabs=1e-15, epsrel=1e-11, norm="max", limit=20000)
        if not np.all(np.isfinite(val)) or err > 1e-9 * np.abs(val).max() + 1e-13:
            raise QuadratureError(f"gamma_p table quadrature did not converge on [{lo}, {hi}]")
        total += val
    return total / TWO_PI


class GammaPTable:
    """gamma_p on a uniform grid over [-w_max, w_max], cubic interpolation.

    Non-negative frequencies are integrated; negative ones follow from the exact
    KMS relation gamma_p(-w) = exp(-beta w) gamma_p(w) of the two kernels.
    """

    def __init__(self, spec: HybridSpectrum, w_max: float, n_points: int = TABLE_POINTS):
        if not w_max > 0:
            raise DomainError("w_max must be positive")
        self.spec = spec
        self.w_max = float(w_max)
        grid = np.linspace(-w_max, w_max, n_points)
        half = grid[grid >= 0]
        pos = _gamma_p_vector(spec, half)
        neg = pos[1:][::-1] * np.exp(-spec.beta * half[1:][::-1])
        vals = np.concatenate([neg, pos])
        self.grid = grid
        self.values = vals
        self._spline = CubicSpline(grid, vals)

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        if np.any(np.abs(w) > self.w_max * (1 + 1e-12)):
            raise DomainError("frequency outside the tabulated range")
        return self._spline(w)


@lru_cache(maxsize=64)
def gamma_p_table(spec: HybridSpectrum, w_max: float, n_points: int = TABLE_POINTS) -> GammaPTable:
    return GammaPTable(spec, w_max, n_points)


@dataclass
class PopulationVector:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if abs(p.sum() - 1.0) > 1e-9:
            raise DomainError("populations must sum to 1")
        if p.min() < -CLAMP_LIMIT:
            raise DomainError("populations must be nonnegative")
        self.probs = np.clip(p, 0.0, None)


def population_from_state(n: int, z: int) -> PopulationVector:
    p = np.zeros(1 << n)
    p[z] = 1.0
    return PopulationVector(p)


@dataclass
class TransferMatrix:
    matrix: sp.csr_matrix
    s: float

    @property
    def nnz_structural(self) -> int:
        return int(self.matrix.nnz)


@lru_cache(maxsize=32)
def _flip_pairs(n: int):
    """(row a, column b) for every ordered single-bit-flip pair, and the flipped bit."""
    if n > PTRE_MAX_QUBITS:
        raise CapacityError(f"transfer matrices limited to N <= {PTRE_MAX_QUBITS}")
    b = np.arange(1 << n, dtype=np.int64)
    rows = np.concatenate([b ^ (1 << i) for i in range(n)])
    cols = np.tile(b, n)
    return rows, cols


def bohr_range(spec: ProblemSpec, sched: Schedule) -> float:
    """Largest |w_b - w_a| over single flips and all s (B is largest at s = 1)."""
    e = target_diagonal(spec)
    rows, cols = _flip_pairs(spec.n_qubits)
    return 0.5 * float(sched.b.max()) * float(np.abs(e[cols] - e[rows]).max())


class TransferBuilder:
    """Assembles T(s) quickly for one problem, schedule and spectrum."""

    def __init__(self, spec: ProblemSpec, sched: Schedule, spectrum: HybridSpectrum,
                 table: GammaPTable | None = None):
        self.spec, self.sched, self.spectrum = spec, sched, spectrum
        self.rows, self.cols = _flip_pairs(spec.n_qubits)
        e = target_diagonal(spec)
        self.de = e[self.cols] - e[self.rows]          # E_b - E_a for the jump b -> a
        w_max = max(bohr_range(spec, sched), 1e-6) * 1.001
        self.table = table or gamma_p_table(spectrum, w_max)
        dim = spec.dim
        self.dim = dim
        # structural pattern: off-diagonal flips plus the diagonal
        self._r = np.concatenate([self.rows, np.arange(dim)])
        self._c = np.concatenate([self.cols, np.arange(dim)])

    def rates(self, s: float) -> np.ndarray:
        a, b = eval_schedule(self.sched, s)
        return self.table(0.5 * b * self.de) * (a * a / 4.0)

    def dense(self, s: float) -> np.ndarray:
        k = self.rates(s)
        t = np.zeros((self.dim, self.dim))
        t[self.rows, self.cols] = k
        t[np.arange(self.dim), np.arange(self.dim)] = -np.bincount(self.cols, weights=k, minlength=self.dim)
        return t

    def sparse(self, s: float) -> sp.csr_matrix:
        k = self.rates(s)
        diag = -np.bincount(self.cols, weights=k, minlength=self.dim)
        data = np.concatenate([k, diag])
        m = sp.coo_matrix((data, (self._r, self._c)), shape=(self.dim, self.dim)).tocsr()
        m.sum_duplicates()
        return m

    def apply(self, s: float, p: np.ndarray) -> np.ndarray:
        k = self.rates(s)
        out = np.bincount(self.rows, weights=k * p[self.cols], minlength=self.dim)
        out -= np.bincount(self.cols, weights=k, minlength=self.dim) * p
        return out


def transfer_matrix(spec: ProblemSpec, sched: Schedule, s: float,
                    spectrum: HybridSpectrum) -> TransferMatrix:
    """Sparse rate matrix T(s); every single-flip entry and the diagonal are stored explicitly."""
    builder = TransferBuilder(spec, sched, spectrum)
    k = builder.rates(s)
    diag = -np.bincount(builder.cols, weights=k, minlength=builder.dim)
    data = np.concatenate([k, diag])
    m = sp.csr_matrix((data, (builder._r, builder._c)), shape=(builder.dim, builder.dim))
    return TransferMatrix(m, float(s))


def stationary_state(t: np.ndarray) -> np.ndarray:
    """Kernel vector of a rate matrix, normalized to a probability vector."""
    w, v = np.linalg.eig(t)
    k = int(np.argmin(np.abs(w)))
    p = np.real(v[:, k])
    return p / p.sum()


def evolve_ptre(spec: ProblemSpec, sched: Schedule, proto: AnnealProtocol, p0: PopulationVector,
                spectrum: HybridSpectrum, cfg: IntegratorConfig | None = None) -> PopulationVector:
    """Integrate dp/dt = T(s(t)) p over `proto.cycles` cycles (implicit stepper, analytic Jacobian)."""
    cfg = cfg or PTRE_DEFAULT_CFG
    builder = _builder(spec, sched, spectrum)
    p = np.asarray(p0.probs, dtype=float)
    if p.size != spec.dim:
        raise DomainError("population vector dimension does not match the problem size")
    use_sparse = spec.dim > 256
    for _ in range(proto.cycles):
        for br in proto.branches():
            t_pts = np.array([br.t_start, br.t_end])

            def s_of(t, br=br):
                return br.s_at(min(max(t, br.t_start), br.t_end))

            def rhs(t, y):
                return builder.apply(s_of(t), y)

            def jac(t, y):
                s = s_of(t)
                return builder.sparse(s) if use_sparse else builder.dense(s)

            for t0, t1 in zip(t_pts[:-1], t_pts[1:]):
                if t1 <= t0:
                    continue
                sol = sint.solve_ivp(rhs, (t0, t1), p, method=cfg.method, jac=jac,
                                     rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step)
                if sol.status != 0:
                    raise StiffnessError(sol.message)
                p = sol.y[:, -1]
                p = _checked(p)
    return PopulationVector(p / p.sum())


def _checked(p: np.ndarray) -> np.ndarray:
    lo = p.min()
    if lo < -NEGATIVE_LIMIT:
        raise PhysicalityError(f"negative population {lo:.2e}")
    if abs(p.sum() - 1.0) > 1e-9:
        raise PhysicalityError(f"probability drift {abs(p.sum() - 1.0):.2e}")
    if lo < 0:
        if lo < -CLAMP_LIMIT:
            log.info("clamped negative population %.2e", lo)
        p = np.clip(p, 0.0, None)
    return p


@lru_cache(maxsize=16)
def _builder(spec: ProblemSpec, sched: Schedule, spectrum: HybridSpectrum) -> TransferBuilder:
    return TransferBuilder(spec, sched, spectrum)


def success_from_populations(p: PopulationVector) -> tuple[float, float, float]:
    probs = p.probs
    return float(probs[0] + probs[-1]), float(probs[0]), float(probs[-1])
