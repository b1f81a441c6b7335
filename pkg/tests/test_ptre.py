import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.linalg import expm

from annealsim.ame import gamma_ohmic
from annealsim.errors import CapacityError, DomainError
from annealsim.model import ProblemSpec, target_diagonal
from annealsim.ptre import (HybridSpectrum, PopulationVector, TransferBuilder, evolve_ptre, g_high, g_low, gamma_p,
                            gamma_p_table, population_from_state, stationary_state, success_from_populations,
                            transfer_matrix)
from annealsim.schedule import AnnealProtocol, Schedule, TWO_PI, eval_schedule, temperature_to_rate

BEST = HybridSpectrum.from_lab_units(8.0, 25.0, 2.5e-3, 1.0)


def test_best_fit_conversion():
    assert BEST.temperature == 25.0 and BEST.eta_g2 == 2.5e-3
    assert BEST.omega_c == pytest.approx(TWO_PI * 1e3)
    assert BEST.W == pytest.approx(temperature_to_rate(8.0))
    assert BEST.W**2 == pytest.approx(2 * BEST.eps_L * BEST.kT, rel=1e-12)


def test_spectrum_validation():
    with pytest.raises(DomainError):
        HybridSpectrum(temperature=25.0, eta_g2=1e-3)
    with pytest.raises(DomainError):
        HybridSpectrum(temperature=25.0, eta_g2=1e-3, W=1.0, eps_L=1.0)
    eps = HybridSpectrum(temperature=25.0, eta_g2=1e-3, eps_L=0.3)
    assert eps.W == pytest.approx(np.sqrt(2 * 0.3 * eps.kT))


def test_g_low_kms_and_peak():
    for spec in (BEST, HybridSpectrum.from_lab_units(20.0, 12.0, 1e-3)):
        assert g_low(spec, -1.0) / g_low(spec, 1.0) == pytest.approx(np.exp(-spec.beta), rel=1e-12)
        assert g_low(spec, 4 * spec.eps_L) == pytest.approx(np.sqrt(np.pi / (2 * spec.W**2)), rel=1e-14)


def test_g_low_normalization():
    c, w = 4 * BEST.eps_L, BEST.W
    val, _ = integrate.quad(lambda x: g_low(BEST, x), c - 40 * w, c + 40 * w, epsabs=0, epsrel=1e-12)
    assert val == pytest.approx(2 * np.pi, rel=1e-10)


def test_g_high_limits():
    g0 = gamma_ohmic(BEST.bath, 0.0)
    assert g_high(BEST, 0.0) == pytest.approx(1 / g0, rel=1e-14)
    assert g_high(BEST, -2.0) / g_high(BEST, 2.0) == pytest.approx(np.exp(-2 * BEST.beta), rel=1e-12)
    assert g_high(BEST, 30 * BEST.omega_c) < 1e-12 * g_high(BEST, BEST.omega_c)


def test_gamma_p_kms_scalar():
    for w in np.logspace(-2, np.log10(50.0), 8):
        pos, neg = gamma_p(BEST, w), gamma_p(BEST, -w)
        assert abs(neg - np.exp(-BEST.beta * w) * pos) / pos <= 1e-6


def test_gamma_p_table_kms_and_accuracy():
    table = gamma_p_table(BEST, 60.0)
    w = np.linspace(0.05, 50.0, 40)
    assert np.allclose(table(-w), np.exp(-BEST.beta * w) * table(w), rtol=1e-6)
    for x in (-7.3, 0.4, 13.1):
        assert table(x) == pytest.approx(gamma_p(BEST, x), rel=1e-6)
    with pytest.raises(DomainError):
        table(61.0)


def test_gamma_p_narrow_gaussian_limit():
    narrow = HybridSpectrum(temperature=25.0, eta_g2=2.5e-3, W=1e-3)
    for w in (-3.0, 0.0, 0.5, 4.0):
        assert gamma_p(narrow, w) == pytest.approx(g_high(narrow, w - 4 * narrow.eps_L), rel=1e-3)


@pytest.mark.parametrize("n", range(2, 11))
def test_structural_nonzeros(sched, n):
    tm = transfer_matrix(ProblemSpec(n), sched, 0.5, BEST)
    assert tm.nnz_structural == (n + 1) * 2**n


def test_capacity_guard(sched):
    with pytest.raises(CapacityError):
        transfer_matrix(ProblemSpec(25), sched, 0.5, BEST)


@pytest.fixture(scope="module")
def builder3(sched):
    return TransferBuilder(ProblemSpec(3), sched, BEST)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 1.0))
def test_generator_structure(builder3, s):
    t = builder3.dense(s)
    assert np.abs(t.sum(axis=0)).max() < 1e-12
    idx = np.arange(8)
    ham = np.array([[bin(a ^ b).count("1") for b in idx] for a in idx])
    assert np.all(t[(ham != 1) & (ham != 0)] == 0)
    off = t.copy()
    np.fill_diagonal(off, 0.0)
    assert off.min() >= 0
    assert np.allclose(builder3.sparse(s).toarray(), t, atol=0)
    p = np.random.default_rng(1).random(8)
    assert np.allclose(builder3.apply(s, p), t @ p, atol=1e-14)


def test_single_flip_rate_value(sched, builder3):
    s = 0.45
    a, b = eval_schedule(sched, s)
    e = target_diagonal(ProblemSpec(3))
    t = builder3.dense(s)
    # jump 0b001 -> 0b000 has Bohr frequency w_b - w_a
    w = 0.5 * b * (e[1] - e[0])
    assert t[0, 1] == pytest.approx(gamma_p(BEST, w) * a * a / 4, rel=1e-6)


def gibbs(sched, n, s):
    _, b = eval_schedule(sched, s)
    w = 0.5 * b * target_diagonal(ProblemSpec(n))
    g = np.exp(-BEST.beta * (w - w.min()))
    return g / g.sum()


def test_detailed_balance(sched, builder3):
    s = 0.55
    t = builder3.dense(s)
    pi = gibbs(sched, 3, s)
    flux = t * pi[None, :]
    assert np.allclose(flux, flux.T, rtol=1e-6, atol=1e-14)


def test_relaxes_to_gibbs(sched, builder3):
    s = 0.5
    t = builder3.dense(s)
    pi = gibbs(sched, 3, s)
    assert 0.5 * np.abs(stationary_state(t) - pi).sum() < 1e-4
    gap = np.sort(np.abs(np.linalg.eigvals(t).real))[1]
    p_long = expm(t * 60 / gap) @ population_from_state(3, 0b011).probs
    assert 0.5 * np.abs(p_long - pi).sum() < 1e-4


def test_zero_driver_freezes_populations(sched):
    frozen = Schedule(sched.s, np.zeros_like(sched.a), sched.b, name="no-driver")
    p0 = PopulationVector(np.array([0.1, 0.2, 0.3, 0.4]))
    out = evolve_ptre(ProblemSpec(2), frozen, AnnealProtocol(100.0, 0.3, 5.0), p0, BEST)
    assert np.allclose(out.probs, p0.probs, atol=1e-14)


def test_spin_flip_covariance(sched):
    spec = ProblemSpec(4)
    t = TransferBuilder(spec, sched, BEST).dense(0.42)
    flip = np.arange(16)[::-1]
    assert np.allclose(t[np.ix_(flip, flip)], t, rtol=1e-12, atol=0)
    sym = PopulationVector(np.full(16, 1 / 16))
    out = evolve_ptre(spec, sched, AnnealProtocol(500.0, 0.45), sym, BEST)
    _, up, down = success_from_populations(out)
    assert up == pytest.approx(down, abs=1e-9)


def test_evolution_conserves_probability(sched):
    out = evolve_ptre(ProblemSpec(4), sched, AnnealProtocol(1000.0, 0.4, 200.0, 2), population_from_state(4, 1),
                      BEST)
    assert out.probs.sum() == pytest.approx(1.0, abs=1e-9)
    assert out.probs.min() >= 0


def test_asymmetric_relaxation(sched):
    out = evolve_ptre(ProblemSpec(4), sched, AnnealProtocol(5000.0, 0.44), population_from_state(4, 0b0001), BEST)
    _, up, down = success_from_populations(out)
    assert up >= 0.8 and up - down >= 0.5


def test_population_vector_validation():
    with pytest.raises(DomainError):
        PopulationVector(np.array([0.5, 0.4]))
    with pytest.raises(DomainError):
        PopulationVector(np.array([1.1, -0.1]))
