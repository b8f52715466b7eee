"""Input checks shared by the solvers, estimators and CLI."""

import numpy as np

from .exceptions import ConfigError


def check_tau_grid(tau):
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size < 2:
        raise ConfigError("tau grid must be a 1-d array with at least two points", "tau")
    if tau[0] != 0.0:
        raise ConfigError("tau grid must start at 0", "tau")
    if np.any(np.diff(tau) <= 0):
        raise ConfigError("tau grid must be strictly increasing", "tau")
    return tau


def default_tau_grid(tau_max=10.0, n_points=501):
    """Uniform grid on ``[0, tau_max]``; the default step is 0.02/gamma."""
    if tau_max <= 0 or n_points < 2:
        raise ConfigError("need tau_max > 0 and at least two points", "tau_max")
    return np.linspace(0.0, tau_max, int(n_points))


def check_square(matrix, dim=None, name="matrix"):
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square, got shape {matrix.shape}")
    if dim is not None and matrix.shape[0] != dim:
        raise ValueError(f"{name} has dimension {matrix.shape[0]}, expected {dim}")
    return matrix


def check_density_matrix(rho, herm_tol=1e-12, trace_tol=1e-10, eig_tol=1e-10):
    """Raise ``ValueError`` unless ``rho`` is a physical density matrix."""
    rho = check_square(rho, name="density matrix")
    scale = max(np.linalg.norm(rho), 1e-300)
    if np.linalg.norm(rho - rho.conj().T) > herm_tol * scale:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"density matrix trace is {tr}")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -eig_tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho
