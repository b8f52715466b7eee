import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import element_liouvillian, weak_field_g2_zero

from cavityqed.exceptions import (
    ConfigError,
    DegenerateSteadyStateError,
    TruncationCapError,
    UndefinedCorrelationError,
)
from cavityqed.hilbert import annihilation, build_basis, coherent_state, number, sigma
from cavityqed.liouville import (
    apply,
    auto_truncate,
    build_liouvillian,
    conditioned_photon_evolution,
    evolve,
    find_E_sat,
    g2_regression,
    n_sat,
    photon_number_in,
    steady_photon_number,
    steady_state,
    steady_state_for,
    truncation_error,
    unvec,
    vec,
)
from cavityqed.params import SystemParams
from cavityqed.validation import check_density_matrix

WEAK_SETS = [(1.0, 1.6), (1.0, 0.77), (2.0, 5.0)]


def random_density_matrix(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("g,kappa,E", [(1.0, 0.77, 0.3), (2.0, 5.0, 0.7), (0.4, 1.6, 0.0)])
def test_matches_element_equations(g, kappa, E):
    L = build_liouvillian(SystemParams(couplings=(g,), kappa=kappa, drive=E), build_basis(3))
    ref = element_liouvillian(g, kappa, E, n_max=3)
    assert np.abs(L - ref).max() < 1e-12


def test_printed_element_equations_differ():
    # The published (+,-) block has two typos; the corrected one is what matches.
    L = build_liouvillian(SystemParams(couplings=(1.0,), kappa=0.77, drive=0.3), build_basis(3))
    printed = element_liouvillian(1.0, 0.77, 0.3, n_max=3, printed=True)
    assert np.abs(L - printed).max() > 0.5


def test_vec_roundtrip_and_apply():
    rng = np.random.default_rng(1)
    b = build_basis(2)
    rho = random_density_matrix(rng, b.dim)
    np.testing.assert_allclose(unvec(vec(rho)), rho)
    a = annihilation(b)
    L = np.kron(a.T, a)  # rho -> a rho a
    np.testing.assert_allclose(apply(L, rho), a @ rho @ a, atol=1e-14)


params_strategy = st.builds(
    lambda g, g2, kappa, E, gph, two, deph: SystemParams(
        couplings=(g, g2) if two else (g,), kappa=kappa, drive=E, gamma_ph=gph,
        dephasing_mode="collisional" if deph else "none"),
    st.floats(0, 3), st.floats(0, 3), st.floats(0.1, 5), st.floats(0, 2), st.floats(0, 1),
    st.booleans(), st.booleans(),
)


@settings(max_examples=30, deadline=None)
@given(params_strategy, st.integers(0, 2**32 - 1))
def test_trace_and_hermiticity_preserved(params, seed):
    b = build_basis(2, params.n_atoms)
    L = build_liouvillian(params, b)
    rho = random_density_matrix(np.random.default_rng(seed), b.dim)
    d = apply(L, rho)
    scale = np.abs(L).max()
    assert abs(np.trace(d)) < 1e-12 * scale
    assert np.abs(d - d.conj().T).max() < 1e-12 * scale


@settings(max_examples=15, deadline=None)
@given(params_strategy.filter(lambda p: p.drive > 0.05))
def test_steady_state_is_physical(params):
    basis = build_basis(3, params.n_atoms)
    rho = steady_state(build_liouvillian(params, basis), basis.dim)
    check_density_matrix(rho, herm_tol=1e-10, eig_tol=1e-9)
    resid = apply(build_liouvillian(params, basis), rho)
    assert np.abs(resid).max() < 1e-9


def test_degenerate_steady_state_detected():
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(np.zeros((16, 16)))


def test_empty_cavity_is_coherent_state():
    # g = 0: the field relaxes to |alpha = E/kappa>, the atom stays in the ground state.
    # Explicit basis: the automatic truncation leaves ~5e-8 of tail here.
    params = SystemParams(couplings=(0.0,), kappa=1.3, drive=0.9)
    basis, rho = steady_state_for(params, build_basis(20))
    psi = coherent_state(0.9 / 1.3, basis)
    fidelity = np.vdot(psi, rho @ psi).real
    assert fidelity > 1 - 1e-8


def test_auto_truncation_rule():
    params = SystemParams(couplings=(1.0,), kappa=0.77, drive=0.4)
    basis = auto_truncate(params)
    _, rho = steady_state_for(params, basis)
    top = np.diag(rho).real[basis.fock_numbers == basis.n_max].sum()
    assert top < 1e-4
    with pytest.raises(TruncationCapError):
        auto_truncate(params.replace(drive=8.0), cap=8)


def test_truncation_error_weights():
    b = build_basis(2)
    rho = np.zeros((b.dim, b.dim))
    for n, p in enumerate([0.9, 0.09, 0.01]):
        rho[b.index(n, 0), b.index(n, 0)] = p
    # P(2) = 0.01, 2 P(2) / <n> = 0.02 / 0.11, 2 P(2) / <n(n-1)> = 1.
    assert truncation_error(b, rho) == pytest.approx(1.0)
    rho[b.index(2, 0), b.index(2, 0)] = 0.0
    rho[b.index(0, 0), b.index(0, 0)] = 0.91
    assert truncation_error(b, rho) == 0.0


@pytest.mark.parametrize("g,kappa,E", [(1.0, 0.77, 0.173), (1.0, 1.6, 0.1), (2.0, 5.0, 0.436)])
def test_auto_truncation_converges_g2(g, kappa, E):
    # The pair-weighted top-level test keeps g2 converged, not only <n>.
    p = SystemParams(couplings=(g,), kappa=kappa, drive=E)
    auto = g2_regression(p)
    ref = g2_regression(p, basis=build_basis(14))
    assert np.abs(auto.values - ref.values).max() < 1e-6


def test_transit_and_dicke_have_no_master_equation():
    b = build_basis(2)
    with pytest.raises(ConfigError):
        build_liouvillian(SystemParams(gamma_ph=0.1, dephasing_mode="transit", drive=0.1), b)
    with pytest.raises(ConfigError):
        build_liouvillian(SystemParams(couplings=(1, 1), emission_mode="dicke"),
                          build_basis(2, 2))


def test_collisional_dephasing_rate():
    # Pure dephasing alone: the atomic coherence decays at gamma/2 + gamma_ph.
    params = SystemParams(couplings=(0.0,), kappa=1.0, gamma_ph=0.3,
                          dephasing_mode="collisional")
    b = build_basis(1)
    L = build_liouvillian(params, b)
    psi = (b.basis_state(0, 0) + b.basis_state(0, 1)) / np.sqrt(2)
    t = np.linspace(0, 2, 11)
    out = evolve(np.outer(psi, psi.conj()), L, t)
    coh = np.abs(out[:, b.index(0, 1), b.index(0, 0)])
    np.testing.assert_allclose(coh, 0.5 * np.exp(-(0.5 + 0.3) * t), rtol=1e-8)


def test_evolve_matches_expm():
    from scipy.linalg import expm

    params = SystemParams(couplings=(1.0,), kappa=0.77, drive=0.3)
    b = build_basis(3)
    L = build_liouvillian(params, b)
    rho0 = np.zeros((b.dim, b.dim), complex)
    rho0[0, 0] = 1
    t = np.array([0.0, 0.1, 0.35, 1.0, 2.5])
    out = evolve(rho0, L, t)
    for ti, r in zip(t, out):
        np.testing.assert_allclose(r, unvec(expm(L * ti) @ vec(rho0)), atol=1e-9)
    with pytest.raises(ConfigError):
        evolve(rho0, L, [0.0, 0.2, 0.1])


def test_g2_is_one_without_atom():
    params = SystemParams(couplings=(0.0,), kappa=1.0, drive=0.4)
    s = g2_regression(params, basis=build_basis(16))
    np.testing.assert_allclose(s.values, 1.0, atol=1e-8)
    # The automatic truncation also tests the photon-pair weight of the top level.
    auto = g2_regression(params)
    assert np.abs(auto.values - 1).max() < 1e-7


@pytest.mark.parametrize("g,kappa", WEAK_SETS)
def test_weak_field_g2_zero_matches_amplitude_oracle(g, kappa):
    E = 3e-4
    s = g2_regression(SystemParams(couplings=(g,), kappa=kappa, drive=E), [0.0, 0.1])
    # Difference is O(E^2): below 5e-6 here, and falls ~11x for a 3.3x smaller E.
    assert s.values[0] == pytest.approx(weak_field_g2_zero(g, kappa, E), abs=5e-6)


def test_weak_field_correction_scales_as_drive_squared():
    g, kappa = 1.0, 0.77
    diffs = []
    for E in (1e-3, 3e-4):
        s = g2_regression(SystemParams(couplings=(g,), kappa=kappa, drive=E), [0.0, 0.1])
        diffs.append(s.values[0] - weak_field_g2_zero(g, kappa, E))
    assert diffs[0] / diffs[1] == pytest.approx((1e-3 / 3e-4) ** 2, rel=0.05)


def test_zero_drive_is_undefined():
    with pytest.raises(UndefinedCorrelationError, match="zero steady-state photon flux"):
        g2_regression(SystemParams(couplings=(1.0,), kappa=1.0, drive=0.0))


def test_g2_long_time_limit():
    s = g2_regression(SystemParams(couplings=(1.0,), kappa=0.77, drive=0.2),
                      np.linspace(0, 40, 401))
    assert s.values[-1] == pytest.approx(1.0, abs=1e-6)


def test_g2_normalisation_uses_steady_state():
    params = SystemParams(couplings=(1.0,), kappa=1.6, drive=0.3)
    basis, rho = steady_state_for(params)
    a = annihilation(basis)
    n = photon_number_in(basis, rho)
    g20 = np.trace(a.conj().T @ a.conj().T @ a @ a @ rho).real / n**2
    s = g2_regression(params, [0.0, 0.1], basis=basis)
    assert s.values[0] == pytest.approx(g20, rel=1e-10)
    assert s.n_ss == pytest.approx(n)


@pytest.mark.parametrize("g,kappa", [
    pytest.param(1.0, 0.77, marks=pytest.mark.xfail(
        strict=True, reason="O(E^2) multi-photon gap is 2.6e-3 at E = 0.01 for these "
                            "parameters; see the decisions ledger")),
    (1.0, 1.6),
    (2.0, 5.0),
])
def test_conditioned_matches_regression_weak_field(g, kappa):
    params = SystemParams(couplings=(g,), kappa=kappa, drive=0.01)
    tau = np.linspace(0, 10, 501)
    r = g2_regression(params, tau)
    c = conditioned_photon_evolution(params, tau)
    assert np.abs(r.values - c.values).max() < 1e-3


@pytest.mark.parametrize("g,kappa", WEAK_SETS)
def test_conditioned_gap_scales_as_drive_squared(g, kappa):
    tau = np.linspace(0, 10, 501)
    gaps = []
    for E in (0.003, 0.001):
        p = SystemParams(couplings=(g,), kappa=kappa, drive=E)
        gaps.append(np.abs(g2_regression(p, tau).values
                           - conditioned_photon_evolution(p, tau).values).max())
    assert gaps[1] < 1e-3
    assert gaps[0] / gaps[1] == pytest.approx(9.0, rel=0.1)


def test_conditioned_starts_at_collapsed_state():
    params = SystemParams(couplings=(1.0,), kappa=0.77, drive=0.2)
    basis = build_basis(6)
    from cavityqed.hamiltonian import no_jump_steady_state

    psi = no_jump_steady_state(params, basis)
    n = number(basis)
    phi = annihilation(basis) @ psi
    expected = (np.vdot(phi, n @ phi) / np.vdot(phi, phi)).real / np.vdot(psi, n @ psi).real
    s = conditioned_photon_evolution(params, [0.0, 0.5], basis=basis)
    assert s.values[0] == pytest.approx(expected, rel=1e-12)


def test_n_sat_and_E_sat():
    assert n_sat(1.0) == pytest.approx(1 / 8)
    assert n_sat(2.0) == pytest.approx(1 / 32)
    with pytest.raises(ConfigError):
        n_sat(0.0)
    params = SystemParams(couplings=(1.0,), kappa=0.77)
    E_sat = find_E_sat(params)
    assert steady_photon_number(params.replace(drive=E_sat)) == pytest.approx(1 / 8, rel=1e-3)
    # Frozen regression values for the three weak-field parameter sets.
    assert E_sat == pytest.approx(0.5762, rel=1e-3)
    assert find_E_sat(SystemParams(couplings=(2.0,), kappa=5.0)) == pytest.approx(1.4546, rel=1e-3)
    assert find_E_sat(SystemParams(couplings=(1.0,), kappa=1.6)) == pytest.approx(0.8769, rel=1e-3)


def test_two_atom_symmetric_steady_state():
    params = SystemParams(couplings=(1.0, 1.0), kappa=0.77, drive=0.2)
    basis, rho = steady_state_for(params)
    e0 = np.trace(sigma(0, "plus", basis) @ sigma(0, "minus", basis) @ rho).real
    e1 = np.trace(sigma(1, "plus", basis) @ sigma(1, "minus", basis) @ rho).real
    assert e0 == pytest.approx(e1, rel=1e-8)
