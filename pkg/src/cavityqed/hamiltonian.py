"""Coherent and non-Hermitian Hamiltonians (units of hbar, rotating frame)."""

import numpy as np

from .exceptions import ConfigError
from .hilbert import annihilation, number, sigma


def _check(params, basis):
    if params.n_atoms != basis.n_atoms:
        raise ConfigError(
            f"{params.n_atoms} coupling(s) given for a basis with {basis.n_atoms} atom(s)",
            "couplings",
        )


def build_hamiltonian(params, basis):
    """H = sum_j i g_j (a+ s-_j - a s+_j) + i E (a+ - a).

    The free atomic and field terms vanish in the resonant rotating frame.
    """
    _check(params, basis)
    a = annihilation(basis)
    ad = a.conj().T
    H = 1j * params.drive * (ad - a)
    for j, g in enumerate(params.couplings):
        sm = sigma(j, "minus", basis)
        H = H + 1j * g * (ad @ sm - a @ sm.conj().T)
    return H


def dissipative_hamiltonian(params, basis):
    """H_D = -(kappa a+a + gamma/2 sum_j s+_j s-_j), the same for both emission modes."""
    _check(params, basis)
    H_D = -params.kappa * number(basis)
    for j in range(basis.n_atoms):
        sm = sigma(j, "minus", basis)
        H_D = H_D - 0.5 * params.gamma * (sm.conj().T @ sm)
    return H_D


def build_effective_hamiltonian(params, basis):
    """Non-Hermitian H_eff = H_S + i H_D generating the no-jump evolution.

    Transit dephasing never enters here: it acts only through clocked collapses.
    """
    return build_hamiltonian(params, basis) + 1j * dissipative_hamiltonian(params, basis)


def no_jump_steady_state(params, basis):
    """Normalised attractor of the no-jump evolution.

    This is the eigenvector of ``H_eff`` whose eigenvalue has the largest
    imaginary part (slowest norm decay); the normalised conditional state
    relaxes onto it between detections.
    """
    H_eff = build_effective_hamiltonian(params, basis)
    w, v = np.linalg.eig(H_eff)
    order = np.argsort(w.imag)
    if len(w) > 1 and abs(w.imag[order[-1]] - w.imag[order[-2]]) < 1e-12:
        raise ValueError("no-jump steady state is degenerate")
    psi = v[:, order[-1]]
    # Fix the global phase so the vacuum-ground amplitude is real positive.
    k = int(np.argmax(np.abs(psi)))
    psi = psi * np.exp(-1j * np.angle(psi[0] if abs(psi[0]) > 1e-12 else psi[k]))
    return psi / np.linalg.norm(psi)
