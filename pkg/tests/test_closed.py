import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from annealsim.closed import (PureState, basis_state, propagate_cycle, propagate_direct, propagate_iterated,
                              success_probability)
from annealsim.model import ProblemSpec, max_spin_overlap
from annealsim.schedule import AnnealProtocol
from annealsim.sectors import decomposition


def test_success_probability_examples():
    assert success_probability(basis_state(3, 0)) == (1.0, 1.0, 0.0)
    amp = np.zeros(8, dtype=complex)
    amp[0] = amp[-1] = 1 / np.sqrt(2)
    assert success_probability(PureState(amp)) == pytest.approx((1.0, 0.5, 0.5))


def test_vanishing_time_is_identity(sched):
    psi0 = basis_state(4, 0b0001)
    for r in (1, 2):
        out = propagate_iterated(ProblemSpec(4), sched, AnnealProtocol(1e-6, 0.3, cycles=r), psi0)
        assert out.fidelity(psi0) > 1 - 1e-6


def test_single_cycle_equals_iterated_r1(sched):
    spec, psi0 = ProblemSpec(4), basis_state(4, 0b0011)
    pr = AnnealProtocol(2.0, 0.35, 0.5)
    a = propagate_cycle(spec, sched, pr, psi0)
    b = propagate_iterated(spec, sched, pr, psi0)
    assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-12)


def test_two_cycles_compose(sched):
    spec, psi0 = ProblemSpec(3), basis_state(3, 0b001)
    pr = AnnealProtocol(3.0, 0.4)
    twice = propagate_cycle(spec, sched, pr, propagate_cycle(spec, sched, pr, psi0))
    it = propagate_iterated(spec, sched, AnnealProtocol(3.0, 0.4, cycles=2), psi0)
    assert it.fidelity(twice) > 1 - 1e-9


@pytest.mark.parametrize("n,z", [(2, 0b01), (3, 0b011)])
def test_agrees_with_direct_oracle(sched, n, z):
    pr = AnnealProtocol(5.0, 0.3, 1.0)
    a = propagate_iterated(ProblemSpec(n), sched, pr, basis_state(n, z))
    b = propagate_direct(ProblemSpec(n), sched, pr, basis_state(n, z))
    assert a.fidelity(b) > 1 - 1e-6


def test_diabatic_window(sched):
    spec, psi0 = ProblemSpec(4), basis_state(4, 0b0001)
    grid = np.arange(0.05, 0.96, 0.05)
    fast = [success_probability(propagate_cycle(spec, sched, AnnealProtocol(0.1, s), psi0))[0] for s in grid]
    slow = [success_probability(propagate_cycle(spec, sched, AnnealProtocol(100.0, s), psi0))[0]
            for s in grid[::3]]
    assert 0.05 < max(fast) <= 0.25 + 1e-9
    assert max(slow) < 1e-3


@settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(1, 14), st.floats(0.05, 5.0), st.floats(0.05, 0.95), st.floats(0.0, 2.0), st.integers(1, 2))
def test_maximum_spin_bound(sched, z, tau, s_inv, pause, r):
    n = 4
    out = propagate_iterated(ProblemSpec(n), sched, AnnealProtocol(tau, s_inv, pause, r), basis_state(n, z))
    assert abs(out.norm - 1) < 1e-9
    assert success_probability(out)[0] <= max_spin_overlap(z, n) + 1e-9


def test_sector_populations_conserved(sched, rng):
    n = 4
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi /= np.linalg.norm(psi)
    out = propagate_iterated(ProblemSpec(n), sched, AnnealProtocol(1.5, 0.3, 0.2, 2), PureState(psi))
    dec = decomposition(n)
    assert np.allclose(dec.sector_populations(out.amplitudes), dec.sector_populations(psi), atol=1e-8)
    assert abs(out.norm - 1) < 1e-8
