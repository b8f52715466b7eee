import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavityqed.exceptions import ConfigError
from cavityqed.hilbert import (
    BasisSpec,
    annihilation,
    build_basis,
    coherent_state,
    creation,
    expectation,
    identity,
    number,
    sigma,
)


def test_dimensions():
    assert build_basis(3).dim == 8
    assert build_basis(3, 2).dim == 16
    assert build_basis(5, 2).n_configs == 4


@pytest.mark.parametrize("n_max,n_atoms", [(0, 1), (3, 3), (2.5, 1), (-1, 1)])
def test_bad_basis(n_max, n_atoms):
    with pytest.raises(ConfigError):
        BasisSpec(n_max, n_atoms)


@given(st.integers(1, 8), st.integers(1, 2), st.data())
def test_index_roundtrip(n_max, n_atoms, data):
    b = BasisSpec(n_max, n_atoms)
    i = data.draw(st.integers(0, b.dim - 1))
    fock, bits = b.unpack(i)
    assert b.index(fock, *bits) == i
    assert b.fock_numbers[i] == fock


def test_ordering_atom0_most_significant():
    b = build_basis(2, 2)
    assert b.index(0, 0, 0) == 0
    assert b.index(0, 0, 1) == 1
    assert b.index(0, 1, 0) == 2
    assert b.index(1, 0, 0) == 4


def test_ladder_operators():
    b = build_basis(4)
    a, ad = annihilation(b), creation(b)
    np.testing.assert_allclose(ad @ a, number(b), atol=1e-14)
    comm = a @ ad - ad @ a
    top = b.fock_numbers == b.n_max
    # [a, a+] = 1 except on the truncation edge
    np.testing.assert_allclose(np.diag(comm)[~top], 1.0)
    psi = a @ b.basis_state(3, 1)
    np.testing.assert_allclose(psi, np.sqrt(3) * b.basis_state(2, 1))


def test_operators_read_only():
    a = annihilation(build_basis(2))
    with pytest.raises(ValueError):
        a[0, 0] = 1.0


@pytest.mark.parametrize("n_atoms", [1, 2])
def test_atomic_algebra(n_atoms):
    b = build_basis(2, n_atoms)
    for j in range(n_atoms):
        sm, sp, sz = (sigma(j, w, b) for w in ("minus", "plus", "z"))
        np.testing.assert_allclose(sp @ sm - sm @ sp, 2 * sz, atol=1e-14)
        np.testing.assert_allclose(sm @ sm, 0, atol=1e-14)
        excited = b.excited_mask(j)
        np.testing.assert_allclose(np.diag(sz).real, np.where(excited, 0.5, -0.5))
    if n_atoms == 2:
        s0, s1 = sigma(0, "minus", b), sigma(1, "minus", b)
        np.testing.assert_allclose(s0 @ s1, s1 @ s0, atol=1e-14)
        assert np.allclose(s0 @ b.basis_state(1, 1, 0), b.basis_state(1, 0, 0))


def test_sigma_bad_atom():
    with pytest.raises(ConfigError):
        sigma(1, "minus", build_basis(2))
    with pytest.raises(ValueError):
        sigma(0, "x", build_basis(2))


def test_coherent_state_photon_number():
    # Poisson statistics: <n> = |alpha|^2, up to the (tiny) truncation tail.
    b = build_basis(10)
    psi = coherent_state(0.5, b)
    assert expectation(number(b), psi).real == pytest.approx(0.25, abs=1e-9)
    assert abs(np.linalg.norm(psi) - 1) < 1e-14


@given(st.floats(0, 1.0), st.floats(0, 2 * np.pi))
def test_coherent_state_is_eigenstate(r, phi):
    alpha = r * np.exp(1j * phi)
    b = build_basis(20)
    psi = coherent_state(alpha, b)
    resid = annihilation(b) @ psi - alpha * psi
    assert np.linalg.norm(resid) < 1e-9


def test_expectation_pure_and_mixed():
    b = build_basis(3)
    psi = 2.0 * b.basis_state(2, 1)
    assert expectation(number(b), psi) == pytest.approx(2.0)
    rho = np.outer(psi, psi.conj()) / 4
    assert expectation(number(b), rho) == pytest.approx(2.0)
    assert expectation(identity(b), rho) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        expectation(number(b), np.ones(3))
