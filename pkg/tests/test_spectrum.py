import math

import numpy as np
import pytest

from annealsim.errors import CapacityError, InsufficientData
from annealsim.model import ProblemSpec
from annealsim.schedule import eval_schedule, linear_schedule
from annealsim.sectors import decomposition
from annealsim.spectrum import GapReport, eigensystem, gap_profile, gap_scaling_fit, sector_gap


def test_s1_ground_doublet(sched):
    _, b1 = eval_schedule(sched, 1.0)
    for n, restrict in ((4, False), (6, True), (8, False)):
        fr = eigensystem(ProblemSpec(n), sched, 1.0, restrict=restrict)
        assert fr.energies[1] - fr.energies[0] < b1 * 1e-6
        assert fr.energies[0] == pytest.approx(-b1 * n / 2, rel=1e-9)


def test_pure_transverse_field():
    sch = linear_schedule(1.0, 1.0)
    n = 4
    a0, _ = eval_schedule(sch, 0.0)
    e = eigensystem(ProblemSpec(n), sch, 0.0).energies
    expect = np.sort(np.concatenate([np.full(math.comb(n, k), -a0 / 2 * (n - 2 * k)) for k in range(n + 1)]))
    assert np.allclose(e, expect, atol=1e-12)


def test_frame_orthonormal_and_gauge(sched):
    fr = eigensystem(ProblemSpec(5), sched, 0.4)
    v = fr.vectors
    assert np.allclose(v.T @ v, np.eye(32), atol=1e-10)
    assert np.all(np.diff(fr.energies) >= 0)
    idx = np.argmax(np.abs(v), axis=0)
    assert np.all(v[idx, np.arange(32)] > 0)


def test_first_excited_merges_with_ground(sched):
    gaps = [np.diff(eigensystem(ProblemSpec(4), sched, s).energies[:2])[0] for s in (0.3, 0.6, 0.8, 1.0)]
    assert gaps[0] > gaps[1] > gaps[2] > gaps[3]
    assert gaps[3] < 1e-6


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_sector_levels_agree_with_dense(sched, n):
    s = 0.37
    sec = eigensystem(ProblemSpec(n), sched, s, restrict=True)
    dense = eigensystem(ProblemSpec(n), sched, s)
    u = decomposition(n).basis_matrix()[:, : n + 1]   # maximum-spin slots come first
    weight = np.sum((u.T @ dense.vectors) ** 2, axis=0)
    sym = dense.energies[weight > 0.5]
    assert sym.size == n + 1
    assert np.allclose(sec.energies, sym, rtol=1e-9, atol=1e-9 * np.abs(sym).max())


def test_gauge_continuity(sched):
    spec = ProblemSpec(6)
    prev = eigensystem(spec, sched, 0.2, restrict=True)
    for s in np.arange(0.201, 0.6, 0.001):
        cur = eigensystem(spec, sched, s, restrict=True, ref=prev.vectors)
        assert np.all(np.einsum("ij,ij->j", prev.vectors, cur.vectors) > 0)
        prev = cur


def test_parity_labels(sched):
    fr = eigensystem(ProblemSpec(4), sched, 0.9)
    flip = np.arange(16)[::-1]
    for k in range(16):
        v = fr.vectors[:, k]
        sign = -1 if fr.parity[k] else 1
        assert np.allclose(v[flip], sign * v, atol=1e-10)


def test_gap_matches_dense_oracle(sched):
    n = 4
    rep = gap_profile(ProblemSpec(n), sched, np.linspace(0, 1, 51))
    u = decomposition(n).basis_matrix()[:, : n + 1]

    def dense_gap(s):
        fr = eigensystem(ProblemSpec(n), sched, s)
        w = np.sum((u.T @ fr.vectors) ** 2, axis=0)
        e = fr.energies[w > 0.5]
        return e[2] - e[0]

    for s, g in rep.profile[::5]:
        assert g == pytest.approx(dense_gap(s), rel=1e-9)
    assert rep.delta == pytest.approx(dense_gap(rep.s_delta), rel=1e-9)
    assert rep.delta <= rep.profile[:, 1].min()


def test_diagonal_limit_gap(sched):
    n = 4
    _, b1 = eval_schedule(sched, 1.0)
    # symmetric levels at s=1: -(B/2) N m^2 with m = 1, (N-2)/N  -> Delta = (B/2) * 3
    assert sector_gap(ProblemSpec(n), sched, 1.0) == pytest.approx(b1 / 2 * 3, rel=1e-6)


@pytest.mark.parametrize("n", [4, 10, 16, 22])
def test_gap_positive(sched, n):
    rep = gap_profile(ProblemSpec(n), sched)
    assert np.all(rep.profile[:, 1] > 0) and rep.delta > 0


def test_scaling_fit_synthetic():
    ns = [4, 6, 8, 10]
    reps = [GapReport(n, 3.0 * n**-0.5, 0.4, np.zeros((0, 2))) for n in ns]
    assert gap_scaling_fit(reps) == pytest.approx(-0.5, abs=1e-10)
    flat = [GapReport(n, 2.0, 0.4, np.zeros((0, 2))) for n in ns]
    assert gap_scaling_fit(flat) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InsufficientData):
        gap_scaling_fit(reps[:2])


def test_report_serialization(sched):
    rep = gap_profile(ProblemSpec(4), sched, np.linspace(0, 1, 11))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "s,gap_radns" and len(lines) == 12
    assert '"s_delta"' in rep.to_json()


def test_capacity_guards(sched):
    with pytest.raises(CapacityError):
        eigensystem(ProblemSpec(15), sched, 0.5)
    with pytest.raises(CapacityError):
        eigensystem(ProblemSpec(65), sched, 0.5, restrict=True)
    with pytest.raises(CapacityError):
        gap_profile(ProblemSpec(1), sched)
