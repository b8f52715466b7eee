"""Master-equation route: Liouvillian, steady state, propagation and g2.

Density matrices are vectorised column-major (``order='F'``), so
``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)``. A superoperator is a plain
``(D**2, D**2)`` complex array.
"""

import logging
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.optimize import bisect

from .exceptions import (
    ConfigError,
    DegenerateSteadyStateError,
    NumericalError,
    TruncationCapError,
    UndefinedCorrelationError,
)
from .hamiltonian import build_effective_hamiltonian, build_hamiltonian, no_jump_steady_state
from .hilbert import BasisSpec, annihilation, number, sigma
from .series import CorrelationSeries
from .validation import check_tau_grid, default_tau_grid

log = logging.getLogger(__name__)

# gamma_ph * DEPHASING_SCALE * (Z rho Z - rho) with Z the +-1 Pauli matrix.
# The factor 1/2 makes gamma_ph the added decay rate of the atomic coherence.
DEPHASING_SCALE = 0.5

TRUNCATION_START = 4
TRUNCATION_STEP = 4
TRUNCATION_CAP = 64
TRUNCATION_TOL = 1e-4
# Largest Hilbert-space dimension the dense steady-state solver will attempt.
MAX_DENSE_DIM = 96


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim=None):
    v = np.asarray(v)
    dim = dim or int(round(np.sqrt(v.size)))
    return v.reshape(dim, dim, order="F")


def spre(A):
    """Superoperator of ``rho -> A rho``."""
    return np.kron(np.eye(A.shape[0]), A)


def spost(A):
    """Superoperator of ``rho -> rho A``."""
    return np.kron(A.T, np.eye(A.shape[0]))


def sprepost(A, B):
    """Superoperator of ``rho -> A rho B``."""
    return np.kron(B.T, A)


def dissipator(c, rate):
    """``rate * (2 c rho c+ - c+c rho - rho c+c)``."""
    cd = c.conj().T
    cdc = cd @ c
    return rate * (2 * sprepost(c, cd) - spre(cdc) - spost(cdc))


def apply(L, rho):
    return unvec(L @ vec(rho), rho.shape[0])


def build_liouvillian(params, basis):
    """Generator of d(rho)/dt for the driven, damped atom-cavity system.

    Cavity field decay at rate kappa (intensity decay 2 kappa), atomic decay
    at gamma per atom, and optional collisional dephasing of each atom.
    """
    if params.dephasing_mode == "transit":
        raise ConfigError(
            "transit dephasing has no master-equation form; use the trajectory module",
            "dephasing",
        )
    if params.emission_mode == "dicke":
        raise ConfigError(
            "dicke emission is a trajectory unraveling only; use the trajectory module",
            "emission",
        )
    H = build_hamiltonian(params, basis)
    L = -1j * (spre(H) - spost(H))
    L += dissipator(annihilation(basis), params.kappa)
    for j in range(basis.n_atoms):
        L += dissipator(sigma(j, "minus", basis), 0.5 * params.gamma)
    if params.dephasing_mode == "collisional" and params.gamma_ph > 0:
        eye = np.eye(basis.dim * basis.dim)
        for j in range(basis.n_atoms):
            z = 2 * sigma(j, "z", basis)
            L += params.gamma_ph * DEPHASING_SCALE * (sprepost(z, z) - eye)
    return L


def steady_state(L, dim=None, scaling=None):
    """Null vector of ``L`` as a trace-one Hermitian density matrix.

    Uses the right singular vector of the smallest singular value; the
    second smallest must exceed ``1e-8`` times the largest or the steady
    state is reported as degenerate.

    ``scaling`` is an optional positive diagonal ``s`` for the similarity
    ``rho = diag(s) rho_tilde diag(s)``. With ``s`` close to the typical
    amplitude of each basis state, the small high-excitation elements of a
    weakly driven steady state come out with relative rather than absolute
    accuracy.
    """
    L = np.asarray(L)
    dim = dim or int(round(np.sqrt(L.shape[0])))
    if scaling is not None:
        S = np.kron(scaling, scaling)
        L = (L / S[:, None]) * S[None, :]
    _, s, vh = sla.svd(L, lapack_driver="gesdd")
    if s.size > 1 and s[-2] <= 1e-8 * s[0]:
        raise DegenerateSteadyStateError(s[-1], s[-2])
    rho = unvec(vh[-1].conj(), dim)
    if scaling is not None:
        rho = scaling[:, None] * rho * scaling[None, :]
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def photon_number_in(basis, rho):
    return float(np.real(np.sum(basis.fock_numbers * np.diag(rho))))


def excitation_scaling(params, basis):
    """Per-basis-state amplitude scale ``(E/kappa)**q`` with q the excitation number.

    Only shrinks (never grows) elements, and is the identity for drives of
    order kappa and above.
    """
    ratio = params.drive / params.kappa
    if ratio <= 0 or ratio >= 1:
        return None
    q = basis.fock_numbers + np.array([sum(basis.unpack(i)[1]) for i in range(basis.dim)])
    return np.maximum(ratio, 1e-4) ** q.astype(float)


def solve_steady_state(params, basis):
    return steady_state(build_liouvillian(params, basis), basis.dim,
                        scaling=excitation_scaling(params, basis))


def top_fock_population(basis, rho):
    return float(np.real(np.diag(rho)[basis.fock_numbers == basis.n_max].sum()))


def truncation_error(basis, rho):
    """Largest top-level weight among the distributions g2 depends on.

    Weights ``P(n)``, ``n P(n) / <n>`` and ``n (n-1) P(n) / <n (n-1)>``: the
    steady state, the state left by one detection and the photon pairs that
    set g2(0). At weak drive the last two are far larger than ``P(n_max)``,
    so checking them keeps g2 converged and not only <n>.
    """
    p = np.real(np.diag(rho))
    n = basis.fock_numbers.astype(float)
    top = n == basis.n_max
    worst = float(p[top].sum())
    for w in (n, n * (n - 1)):
        norm = float(np.sum(w * p))
        if norm > 0:
            worst = max(worst, float(np.sum(w[top] * p[top])) / norm)
    return worst


def auto_truncate(params, start=TRUNCATION_START, step=TRUNCATION_STEP, cap=TRUNCATION_CAP,
                  tol=TRUNCATION_TOL):
    """Smallest n_max (start, start+step, ...) whose top Fock level holds < ``tol``.

    The test applies to the steady state and to the state just after a
    detection (see :func:`truncation_error`).
    """
    return _auto_truncate(params, start, step, cap, tol)[0]


def _auto_truncate(params, start, step, cap, tol):
    n_max = start
    while n_max <= cap:
        basis = BasisSpec(n_max, params.n_atoms)
        if basis.dim > MAX_DENSE_DIM:
            break
        rho = solve_steady_state(params, basis)
        if truncation_error(basis, rho) < tol:
            return basis, rho
        n_max += step
    raise TruncationCapError(
        f"Fock truncation did not converge below n_max = {min(cap, n_max)}: "
        f"drive E = {params.drive} is too strong"
    )


def steady_state_for(params, basis=None):
    """``(basis, rho_ss)``, choosing the truncation automatically if needed."""
    if basis is None:
        return _auto_truncate(params, TRUNCATION_START, TRUNCATION_STEP, TRUNCATION_CAP,
                              TRUNCATION_TOL)
    return basis, solve_steady_state(params, basis)


def _rk4_matrix(L, dt):
    """One classical RK4 step for the linear ODE ``dx/dt = L x``, as a matrix."""
    h = dt * L
    eye = np.eye(L.shape[0], dtype=complex)
    h2 = h @ h
    return eye + h + h2 / 2 + (h2 @ h) / 6 + (h2 @ h2) / 24


def fastest_rate(L):
    """Gershgorin bound on the spectral radius of ``L`` (the fastest rate present)."""
    return float(np.abs(L).sum(axis=1).max())


def evolve(rho0, L, t_grid, rate=None):
    """``rho(t) = exp(L t) rho0`` on ``t_grid`` by fixed-step RK4.

    The step is ``min(grid spacing, 1 / (20 r))`` with ``r`` the fastest rate,
    each grid interval split into equal substeps; interval propagators are
    cached so uniform grids cost a single matrix power.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ConfigError("t_grid must start at 0 and increase strictly", "tau")
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    if L.shape[0] != dim * dim:
        raise ValueError(f"superoperator of size {L.shape[0]} does not act on dimension {dim}")
    r = rate if rate is not None else fastest_rate(L)
    dt_max = 1.0 / (20.0 * r) if r > 0 else np.inf

    cache = {}

    def propagator(h):
        key = round(h, 12)
        if key not in cache:
            k = max(1, int(np.ceil(h / dt_max - 1e-9)))
            cache[key] = np.linalg.matrix_power(_rk4_matrix(L, h / k), k)
        return cache[key]

    out = np.empty((t_grid.size, dim, dim), dtype=complex)
    v = vec(rho0)
    out[0] = rho0
    for i, h in enumerate(np.diff(t_grid), start=1):
        v = propagator(h) @ v
        out[i] = unvec(v, dim)
    return out


def _undefined_check(n_ss):
    if n_ss <= 1e-12:
        raise UndefinedCorrelationError("undefined correlation: zero steady-state photon flux")


def g2_regression(params, tau_grid=None, basis=None):
    """g2(tau) = Tr[a+a exp(L tau)(a rho_ss a+)] / <a+a>_ss**2 (quantum regression)."""
    tau = check_tau_grid(default_tau_grid() if tau_grid is None else tau_grid)
    basis, rho = steady_state_for(params, basis)
    n_ss = photon_number_in(basis, rho)
    _undefined_check(n_ss)
    L = build_liouvillian(params, basis)
    a = annihilation(basis)
    N = np.diag(number(basis)).real
    traj = evolve(a @ rho @ a.conj().T, L, tau)
    numer = np.real(np.einsum("i,tii->t", N, traj))
    return CorrelationSeries(
        tau_grid=tau,
        values=numer / n_ss**2,
        n_ss=n_ss,
        source="regression",
        meta={"n_max": basis.n_max},
    )


def conditioned_photon_evolution(params, tau_grid=None, basis=None):
    """Photon number after one detection, evolved without further detections.

    The pure no-jump steady state ``psi_ss`` is collapsed to ``a psi_ss`` and
    propagated under ``H_eff``; the series is the normalised conditional
    ``<a+a>_c(tau)`` divided by ``<a+a>`` in ``psi_ss``. In the weak-field
    limit this coincides with g2(tau); at stronger drive it omits the
    multi-photon cascades that the full g2 includes.
    """
    if params.dephasing_mode != "none":
        raise ConfigError("conditioned evolution is defined without dephasing", "dephasing")
    tau = check_tau_grid(default_tau_grid() if tau_grid is None else tau_grid)
    if basis is None:
        basis, rho = steady_state_for(params)
        n_master = photon_number_in(basis, rho)
    else:
        n_master = None
    if params.drive == 0:
        raise UndefinedCorrelationError("undefined correlation: zero steady-state photon flux")
    psi_ss = no_jump_steady_state(params, basis)
    nums = basis.fock_numbers.astype(float)
    n_pure = float(np.sum(nums * np.abs(psi_ss) ** 2))
    _undefined_check(n_pure)
    H_eff = build_effective_hamiltonian(params, basis)
    psi = annihilation(basis) @ psi_ss
    psi /= np.linalg.norm(psi)

    cache = {}
    values = np.empty(tau.size)
    for i, t in enumerate(tau):
        if i:
            h = round(t - tau[i - 1], 12)
            if h not in cache:
                cache[h] = sla.expm(-1j * H_eff * h)
            psi = cache[h] @ psi
            psi /= np.linalg.norm(psi)
        values[i] = np.sum(nums * np.abs(psi) ** 2) / n_pure
    meta = {"n_max": basis.n_max}
    if n_master is not None:
        meta["n_ss_master"] = n_master
    return CorrelationSeries(tau_grid=tau, values=values, n_ss=n_pure, source="conditioned",
                             meta=meta)


def n_sat(g, gamma=1.0):
    """Saturation photon number gamma**2 / (8 g**2)."""
    if g <= 0:
        raise ConfigError("saturation photon number needs g > 0", "g")
    return gamma**2 / (8.0 * g**2)


@lru_cache(maxsize=512)
def _steady_photon_number(params):
    basis, rho = steady_state_for(params)
    return photon_number_in(basis, rho)


def steady_photon_number(params):
    return _steady_photon_number(params)


def find_E_sat(params, rtol=1e-4, e_max=10.0):
    """Drive for which the steady-state photon number equals ``n_sat``.

    The bracket starts at ``[0, 0.05]`` and doubles its upper end until the
    photon number exceeds ``n_sat`` (never beyond ``e_max``); ``<n>(E)`` is
    checked to be increasing on the final bracket before bisecting.
    """
    if params.n_atoms != 1:
        raise ConfigError("E_sat is defined for a single coupling", "couplings")
    target = n_sat(params.g, params.gamma)

    def excess(E):
        return steady_photon_number(params.replace(drive=float(E))) - target

    hi = 0.05
    while excess(hi) <= 0:
        hi *= 2
        if hi > e_max:
            raise NumericalError(f"no sign change of <n> - n_sat on [0, {e_max}]")
    samples = [excess(E) for E in np.linspace(0, hi, 6)]
    if np.any(np.diff(samples) <= 0):
        raise NumericalError("steady-state photon number is not increasing in the drive")
    lo = hi / 2 if excess(hi / 2) < 0 else 0.0
    return float(bisect(excess, lo, hi, rtol=rtol, xtol=1e-12))
