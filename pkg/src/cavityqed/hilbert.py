"""Truncated Fock space tensored with one or two two-level atoms.

Basis ordering: ``index = fock * 2**n_atoms + config``. The atomic
configuration index reads the atoms as binary digits with atom 0 the most
significant bit (the ``np.kron`` ordering), 0 = ground and 1 = excited, so the
all-ground configuration comes first.

Operators are plain dense ``complex128`` arrays, marked read-only.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import ConfigError

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_SIGMA_Z = np.array([[-0.5, 0.0], [0.0, 0.5]], dtype=complex)


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class BasisSpec:
    n_max: int
    n_atoms: int = 1

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms not in (1, 2):
            raise ConfigError(f"n_atoms must be 1 or 2, got {self.n_atoms}", "n_atoms")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ConfigError(f"n_max must be an integer >= 1, got {self.n_max}", "n_max")

    @property
    def n_fock(self):
        return self.n_max + 1

    @property
    def n_configs(self):
        return 2**self.n_atoms

    @property
    def dim(self):
        return self.n_fock * self.n_configs

    def index(self, fock, *excited):
        """Flat index of ``|fock; atom0, atom1>`` with atoms given as 0/1."""
        if len(excited) != self.n_atoms:
            raise ValueError(f"expected {self.n_atoms} atomic labels, got {len(excited)}")
        if not 0 <= fock <= self.n_max:
            raise ValueError(f"Fock index {fock} outside [0, {self.n_max}]")
        config = 0
        for bit in excited:
            config = 2 * config + int(bool(bit))
        return fock * self.n_configs + config

    def unpack(self, index):
        """Inverse of :meth:`index`: ``(fock, (bit_atom0, bit_atom1, ...))``."""
        fock, config = divmod(int(index), self.n_configs)
        bits = tuple((config >> (self.n_atoms - 1 - j)) & 1 for j in range(self.n_atoms))
        return fock, bits

    def basis_state(self, fock, *excited):
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(fock, *excited)] = 1.0
        return psi

    @cached_property
    def fock_numbers(self):
        return np.repeat(np.arange(self.n_fock), self.n_configs)

    def excited_mask(self, j):
        """Boolean mask of basis indices where atom ``j`` is excited."""
        return np.array([self.unpack(i)[1][j] == 1 for i in range(self.dim)])


def build_basis(n_max, n_atoms=1):
    return BasisSpec(n_max, n_atoms)


def _embed(basis, fock_op=None, atom_ops=None):
    ops = [np.eye(basis.n_fock) if fock_op is None else fock_op]
    atom_ops = atom_ops or {}
    for j in range(basis.n_atoms):
        ops.append(atom_ops.get(j, np.eye(2)))
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return _frozen(out)


def annihilation(basis):
    a = np.diag(np.sqrt(np.arange(1, basis.n_fock)), 1)
    return _embed(basis, fock_op=a)


def creation(basis):
    return _frozen(annihilation(basis).conj().T)


def number(basis):
    return _frozen(np.diag(basis.fock_numbers.astype(complex)))


def identity(basis):
    return _frozen(np.eye(basis.dim))


def sigma(j, which, basis):
    """Atomic operator on atom ``j``: ``'minus'``, ``'plus'`` or ``'z'``.

    ``sigma_z`` has eigenvalues +1/2 (excited) and -1/2 (ground).
    """
    if not 0 <= j < basis.n_atoms:
        raise ConfigError(f"atom index {j} out of range for {basis.n_atoms} atom(s)", "atom")
    single = {
        "minus": _SIGMA_MINUS,
        "plus": _SIGMA_MINUS.conj().T,
        "z": _SIGMA_Z,
    }
    if which not in single:
        raise ValueError(f"unknown atomic operator {which!r}")
    return _embed(basis, atom_ops={j: single[which]})


def coherent_state(alpha, basis, excited=None):
    """Truncated coherent state (renormalised) with atoms in ``excited`` (default ground)."""
    amp = np.empty(basis.n_fock, dtype=complex)
    amp[0] = 1.0
    for k in range(1, basis.n_fock):
        amp[k] = amp[k - 1] * alpha / np.sqrt(k)
    atoms = excited if excited is not None else (0,) * basis.n_atoms
    psi = np.zeros(basis.dim, dtype=complex)
    for k in range(basis.n_fock):
        psi[basis.index(k, *atoms)] = amp[k]
    return psi / np.linalg.norm(psi)


def expectation(op, state):
    """``<psi|op|psi>`` (normalising ``psi``) or ``Tr(op rho)``.

    A 1-d ``state`` is a pure state vector, a 2-d one a density matrix.
    """
    op = np.asarray(op)
    state = np.asarray(state)
    if op.shape[0] != state.shape[0]:
        raise ValueError(f"dimension mismatch: operator {op.shape}, state {state.shape}")
    if state.ndim == 1:
        norm2 = np.vdot(state, state).real
        value = np.vdot(state, op @ state) / norm2
    else:
        value = np.trace(op @ state)
    if np.allclose(op, op.conj().T, atol=1e-14):
        assert abs(value.imag) < 1e-10, f"Hermitian expectation has imaginary part {value.imag}"
    return complex(value)
