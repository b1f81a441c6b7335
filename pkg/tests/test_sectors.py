import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from annealsim.model import ProblemSpec, hamiltonian
from annealsim.schedule import eval_schedule
from annealsim.sectors import decomposition, sector_hamiltonian_parts, sector_list, sigma_z_diagonals


@pytest.mark.parametrize("n", range(1, 11))
def test_sector_dimensions(n):
    secs = sector_list(n)
    assert sum(s.dim * s.multiplicity for s in secs) == 1 << n
    assert secs[0].dim == n + 1 and secs[0].multiplicity == 1


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_basis_orthogonal(n):
    u = decomposition(n).basis_matrix()
    assert np.allclose(u.T @ u, np.eye(1 << n), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_roundtrip(n, seed):
    r = np.random.default_rng(seed)
    psi = r.normal(size=1 << n) + 1j * r.normal(size=1 << n)
    dec = decomposition(n)
    assert np.allclose(dec.from_sectors(dec.to_sectors(psi)), psi, atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("s", [0.2, 0.5, 0.9])
def test_block_spectra_reproduce_full_spectrum(sched, n, s):
    a, b = eval_schedule(sched, s)
    full = np.linalg.eigvalsh(hamiltonian(ProblemSpec(n), sched, s))
    parts = []
    for sec in sector_list(n):
        dx, dz = sector_hamiltonian_parts(n, 2, sec)
        parts.append(np.repeat(np.linalg.eigvalsh(a * dx + b * dz), sec.multiplicity))
    assert np.allclose(np.sort(np.concatenate(parts)), full, atol=1e-10 * np.abs(full).max())


def test_sector_populations_of_basis_state():
    n = 4
    dec = decomposition(n)
    psi = np.zeros(16)
    psi[0b0001] = 1.0
    pops = dec.sector_populations(psi)
    assert pops[0] == pytest.approx(0.25) and pops.sum() == pytest.approx(1.0)


def test_sigma_z_diagonals():
    d = sigma_z_diagonals(3)
    assert len(d) == 3 and np.array_equal(d[0], [1, -1, 1, -1, 1, -1, 1, -1])
    (c,) = sigma_z_diagonals(3, collective=True)
    assert c[0] == 3 and c[-1] == -3
