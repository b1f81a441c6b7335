import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from annealsim.errors import DomainError, FormatError, RangeError, SchedulingError
from annealsim.schedule import (KB_OVER_HBAR, AnnealProtocol, ds_dt, eval_schedule, linear_schedule,
                                load_schedule, s_of_t, temperature_to_rate)

LINEAR_CSV = "s,A_GHz,B_GHz\n0,1,0\n1,0,1\n"


def test_endpoint_row_converted_to_rad_per_ns():
    sch = load_schedule("s,A_GHz,B_GHz\n0,6,0\n1.0,1.9e-6,11.97718\n")
    a, b = eval_schedule(sch, 1.0)
    assert a == pytest.approx(2 * math.pi * 1.9e-6, rel=1e-12)
    assert b == pytest.approx(2 * math.pi * 11.97718, rel=1e-12)


def test_two_row_linear_schedule():
    sch = load_schedule(LINEAR_CSV)
    assert eval_schedule(sch, 0.5) == pytest.approx((math.pi, math.pi), rel=1e-14)


def test_non_monotone_s_rejected():
    with pytest.raises(SchedulingError):
        load_schedule("s,A_GHz,B_GHz\n0,1,0\n0.5,0.5,0.5\n0.4,0.6,0.4\n1,0,1\n")


def test_malformed_csv():
    with pytest.raises(FormatError):
        load_schedule("s,A\n0,1\n1,0\n")
    with pytest.raises(FormatError):
        load_schedule("s,A_GHz,B_GHz\n0,x,0\n1,0,1\n")


def test_negative_amplitude_rejected():
    with pytest.raises(RangeError):
        load_schedule("s,A_GHz,B_GHz\n0,1,0\n1,-1,1\n")


def test_ripple_warns_but_loads():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        load_schedule("s,A_GHz,B_GHz\n0,1,0\n0.5,1.2,0.5\n1,0,1\n")
    assert rec


def test_s_out_of_range(sched):
    with pytest.raises(RangeError):
        eval_schedule(sched, 1.2)
    with pytest.raises(RangeError):
        eval_schedule(sched, float("nan"))


def test_bundled_endpoints(sched):
    a, b = eval_schedule(sched, 1.0)
    assert a < 1e-4
    assert b == pytest.approx(2 * math.pi * 11.97718, rel=1e-9)
    a0, b0 = eval_schedule(sched, 0.0)
    assert a0 == pytest.approx(2 * math.pi * 6.0, rel=1e-3)
    assert b0 < 0.05 * b


@given(st.integers(min_value=0, max_value=10_000))
def test_exact_at_grid_points(sched, k):
    i = k % sched.s.size
    a, b = eval_schedule(sched, float(sched.s[i]))
    assert a == sched.a[i] and b == sched.b[i]


def test_monotone_between_nodes(sched):
    a, b = eval_schedule(sched, np.linspace(0, 1, 20001))
    assert np.all(np.diff(a) <= 1e-12) and np.all(np.diff(b) >= -1e-12)


def test_kb_over_hbar():
    # CODATA 2018: k = 1.380649e-23 J/K, hbar = 1.054571817e-34 J s
    assert KB_OVER_HBAR == pytest.approx(0.130920, abs=5e-6)
    assert KB_OVER_HBAR == pytest.approx(1.380649e-23 / 1.054571817e-34 * 1e-12, rel=1e-8)


def test_temperature_conversion():
    assert temperature_to_rate(12.1) == pytest.approx(1.584, abs=5e-4)
    assert temperature_to_rate(25.0) == pytest.approx(3.273, abs=5e-4)
    with pytest.raises(DomainError):
        temperature_to_rate(0.0)


def test_reverse_protocol_values():
    pr = AnnealProtocol(1000.0, 0.2)
    assert s_of_t(pr, 0.0) == 1.0
    assert s_of_t(pr, 800.0) == pytest.approx(0.2, abs=1e-15)
    assert s_of_t(pr, 1600.0) == 1.0
    assert s_of_t(AnnealProtocol(1000.0, 0.2, 500.0), 900.0) == pytest.approx(0.2, abs=1e-15)
    assert AnnealProtocol(5000.0, 0.5, 2000.0).total_time == pytest.approx(7000.0)


def test_forward_protocol():
    pr = AnnealProtocol(10.0, mode="forward")
    assert pr.total_time == 10.0
    assert s_of_t(pr, 2.5) == pytest.approx(0.25)


def test_protocol_validation():
    with pytest.raises(DomainError):
        AnnealProtocol(0.0, 0.5)
    with pytest.raises(RangeError):
        AnnealProtocol(1.0, 1.5)
    with pytest.raises(DomainError):
        AnnealProtocol(1.0, 0.5, cycles=0)
    with pytest.raises(RangeError):
        s_of_t(AnnealProtocol(1.0, 0.5), 5.0)


protocols = st.builds(AnnealProtocol,
                      tau=st.floats(0.01, 1e4),
                      s_inv=st.floats(0.0, 0.99),
                      t_pause=st.one_of(st.just(0.0), st.floats(0.0, 1e4)))


@given(protocols)
def test_cycle_starts_and_ends_at_one(pr):
    assert s_of_t(pr, 0.0) == 1.0
    assert s_of_t(pr, pr.total_time) == 1.0


@given(protocols)
def test_continuous_across_kinks(pr):
    t1 = pr.t_descent
    t2 = t1 + pr.t_pause
    for t in (t1, t2):
        eps = 1e-9 * max(1.0, pr.total_time)
        lo = s_of_t(pr, max(t - eps, 0.0))
        hi = s_of_t(pr, min(t + eps, pr.total_time))
        assert abs(hi - lo) < 1e-12 + 2 * eps / pr.tau


@settings(max_examples=50)
@given(protocols, st.floats(0.05, 0.95))
def test_branch_slopes(pr, frac):
    h = 1e-4 * pr.tau
    t1 = pr.t_descent
    t2 = t1 + pr.t_pause
    pieces = [(0.0, t1, -1.0 / pr.tau), (t1, t2, 0.0), (t2, pr.total_time, 1.0 / pr.tau)]
    for lo, hi, slope in pieces:
        if hi - lo < 10 * h:
            continue
        t = lo + frac * (hi - lo)
        t = min(max(t, lo + 2 * h), hi - 2 * h)
        fd = (s_of_t(pr, t + h) - s_of_t(pr, t - h)) / (2 * h)
        assert fd == pytest.approx(slope, abs=1e-3 / pr.tau)
        assert ds_dt(pr, t) == pytest.approx(slope)


def test_linear_schedule_helper():
    sch = linear_schedule()
    assert eval_schedule(sch, 0.25) == pytest.approx((1.5 * math.pi, 0.5 * math.pi))
