"""Spin-vector Monte Carlo (SVMC) and its transverse-field-restricted variant (SVMC-TF).

Every qubit becomes a planar rotor at angle theta in [0, pi] with classical
energy H(s) = -(A/2) sum sin(theta_i) - (B N / 2) (mean cos theta)^p.  One sweep
proposes a new angle for each spin in turn and applies the Metropolis rule;
time is measured in sweeps.  Walkers are vectorized, but every walker draws
from its own random stream, so results do not depend on how walkers are split
across threads.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import ProblemSpec, delta_energy, popcount
from .schedule import AnnealProtocol, Schedule, eval_schedule, s_of_t, temperature_to_rate

CHUNK_SWEEPS = 64


class Variant(str, enum.Enum):
    SVMC = "svmc"
    SVMC_TF = "svmc_tf"


@dataclass(frozen=True)
class SvmcConfig:
    variant: Variant | str = Variant.SVMC_TF
    sweeps_tau: int = 1000
    beta: float = 1.0 / temperature_to_rate(12.1)    # ns/rad
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if int(self.sweeps_tau) != self.sweeps_tau or self.sweeps_tau < 1:
            raise DomainError("sweeps_tau must be a positive integer")
        if int(self.samples) != self.samples or self.samples < 1:
            raise DomainError("samples must be a positive integer")
        if not self.beta >= 0:
            raise DomainError("beta must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @classmethod
    def at_temperature(cls, temperature_mk: float, **kw) -> "SvmcConfig":
        return cls(beta=1.0 / temperature_to_rate(temperature_mk), **kw)

    def total_sweeps(self, s_inv: float) -> int:
        return int(round(2 * self.sweeps_tau * (1.0 - s_inv)))


def walker_stream(seed: int, walker: int) -> np.random.Generator:
    """Independent generator for one walker, fixed by (seed, walker index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(walker),))))


def fold_angle(x):
    """Reflect angles into [0, pi] (period 2 pi)."""
    y = np.mod(x, 2 * np.pi)
    return np.where(y > np.pi, 2 * np.pi - y, y)


def tf_window(a: float, b: float) -> float:
    """min(1, A/B); the full window when B = 0."""
    if b <= 0:
        return 1.0
    return min(1.0, a / b)


def propose_angle(variant: Variant | str, u, theta, a: float, b: float):
    """New angle from uniform variates u in [0, 1).

    SVMC: uniform on [0, pi].  SVMC-TF: theta + eps with eps uniform on
    [-w pi, w pi], w = min(1, A/B), reflected back into [0, pi]; for w = 1 this
    is again uniform on [0, pi].
    """
    variant = Variant(variant)
    u = np.asarray(u, dtype=float)
    if variant is Variant.SVMC:
        return np.pi * u
    w = tf_window(a, b)
    return fold_angle(theta + (2.0 * u - 1.0) * w * np.pi)


def project_to_basis(angles) -> int | np.ndarray:
    """Bit i = 0 (up) iff theta_i <= pi/2; accepts one walker (N,) or many (K, N)."""
    th = np.asarray(angles, dtype=float)
    bits = (th > np.pi / 2).astype(np.int64)
    weights = np.int64(1) << np.arange(th.shape[-1], dtype=np.int64)
    z = bits @ weights
    return int(z) if np.ndim(z) == 0 else z


def sweep_schedule(sched: Schedule, proto: AnnealProtocol, cfg: SvmcConfig):
    """(A, B) at every sweep of one cycle."""
    if proto.mode != "reverse":
        raise DomainError("SVMC supports reverse-anneal protocols only")
    pause = int(round(proto.t_pause * cfg.sweeps_tau / proto.tau))
    sweeps_proto = AnnealProtocol(float(cfg.sweeps_tau), proto.s_inv, float(pause), 1, "reverse")
    n_sweeps = cfg.total_sweeps(proto.s_inv) + pause
    if n_sweeps == 0:
        return np.zeros(0), np.zeros(0)
    t_a = sweeps_proto.total_time
    s = np.array([s_of_t(sweeps_proto, min(k * t_a / n_sweeps, t_a)) for k in range(1, n_sweeps + 1)])
    return eval_schedule(sched, s)


def run_walkers(spec: ProblemSpec, a_seq, b_seq, init_angles, cfg: SvmcConfig, walkers=None,
                cycles: int = 1, antithetic: bool = False) -> np.ndarray:
    """Final angles (walkers x N) after `cycles` passes over the sweep sequence (A_t, B_t)."""
    n = spec.n_qubits
    a_seq = np.atleast_1d(np.asarray(a_seq, dtype=float))
    b_seq = np.atleast_1d(np.asarray(b_seq, dtype=float))
    walkers = np.arange(cfg.samples) if walkers is None else np.asarray(walkers)
    p = spec.exponent
    k = len(walkers)
    rngs = [walker_stream(cfg.seed, w) for w in walkers]
    theta = np.tile(np.asarray(init_angles, dtype=float), (k, 1))
    ssin = np.sin(theta).sum(axis=1)
    scos = np.cos(theta).sum(axis=1)
    n_sweeps = a_seq.size
    beta = cfg.beta
    variant = cfg.variant
    for _ in range(cycles):
        for start in range(0, n_sweeps, CHUNK_SWEEPS):
            stop = min(start + CHUNK_SWEEPS, n_sweeps)
            # per walker: (sweep, spin, [proposal, acceptance]) uniforms
            u = np.stack([r.random((stop - start, n, 2)) for r in rngs])
            if antithetic:
                u[..., 0] = 1.0 - u[..., 0]
            for j, t in enumerate(range(start, stop)):
                a, b = a_seq[t], b_seq[t]
                for i in range(n):
                    old = theta[:, i]
                    new = propose_angle(variant, u[:, j, i, 0], old, a, b)
                    de = delta_energy(ssin, scos, old, new, n, a, b, p)
                    with np.errstate(over="ignore", invalid="ignore"):
                        acc = (de <= 0) | (u[:, j, i, 1] < np.exp(-beta * de))
                    if acc.any():
                        sn, cn = np.sin(new), np.cos(new)
                        so, co = np.sin(old), np.cos(old)
                        ssin = np.where(acc, ssin + sn - so, ssin)
                        scos = np.where(acc, scos + cn - co, scos)
                        theta[:, i] = np.where(acc, new, old)
            # re-sync cached sums against round-off
            ssin = np.sin(theta).sum(axis=1)
            scos = np.cos(theta).sum(axis=1)
    return theta


def run_svmc(spec: ProblemSpec, sched: Schedule, proto: AnnealProtocol, initial: int,
             cfg: SvmcConfig, threads: int = 1, antithetic: bool = False) -> np.ndarray:
    """Final basis states (length `samples`) of independent walkers.

    The protocol supplies s_inv, the pause (converted to sweeps with the ratio
    sweeps_tau / tau) and the number of cycles; the sweep count per cycle is
    round(2 sweeps_tau (1 - s_inv)) plus the pause sweeps.  `antithetic` replaces
    every proposal variate u by 1 - u, which makes a run the spin-flip partner
    (theta -> pi - theta) of the plain run with the same seed.
    """
    n = spec.n_qubits
    if not 0 <= initial < spec.dim:
        raise DomainError("initial state out of range")
    init = np.pi * ((initial >> np.arange(n)) & 1).astype(float)
    a_seq, b_seq = sweep_schedule(sched, proto, cfg)
    walkers = np.arange(cfg.samples)
    threads = max(1, int(threads))
    blocks = np.array_split(walkers, min(threads, cfg.samples))
    def block(w):
        return run_walkers(spec, a_seq, b_seq, init, cfg, w, proto.cycles, antithetic)

    if threads == 1:
        thetas = [block(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            thetas = list(pool.map(block, blocks))
    return project_to_basis(np.concatenate(thetas))


def partial_stats(finals, n: int) -> tuple[float, float, float, float]:
    """(total, p_up, p_down, stderr); stderr is the largest binomial standard error of the three."""
    z = np.asarray(finals, dtype=np.int64)
    k = z.size
    if k < 1:
        raise DomainError("need at least one sample")
    p_up = float(np.count_nonzero(z == 0)) / k
    p_down = float(np.count_nonzero(z == (1 << n) - 1)) / k
    total = p_up + p_down
    stderr = max(math.sqrt(q * (1.0 - q) / k) for q in (total, p_up, p_down))
    return total, p_up, p_down, stderr


def level_populations(finals, n: int) -> np.ndarray:
    """Fraction of samples per number of down spins (0..N)."""
    z = np.asarray(finals, dtype=np.int64)
    return np.bincount(popcount(z).astype(int), minlength=n + 1) / z.size
