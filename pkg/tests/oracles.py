"""Independent reference computations used by the tests.

Nothing here imports the operator-building code of the package: the
Fock-basis master equation is written out element by element and the weak
field amplitudes come from a perturbative solve in the 0/1/2-excitation
manifolds.
"""

import numpy as np

PLUS, MINUS = 1, 0  # atomic configuration bit: 1 = upper state


def element_liouvillian(g, kappa, E, n_max, gamma=1.0, printed=False):
    """Single-atom Liouvillian assembled from the Fock-basis rate equations.

    Index convention: ``(n, s) -> 2 n + s``; ``rho`` vectorised column-major.
    ``printed=True`` reproduces two typos of the published element equations
    for the ``(+, -)`` block (wrong atomic index on the first coupling term and
    the sign of the gamma/2 damping); the default uses the corrected forms.
    """
    dim = 2 * (n_max + 1)

    def idx(n, s):
        return 2 * n + s

    def vidx(n, s, m, t):
        return idx(n, s) + dim * idx(m, t)

    L = np.zeros((dim * dim, dim * dim))

    def add(row, n, s, m, t, coeff):
        if 0 <= n <= n_max and 0 <= m <= n_max:
            L[row, vidx(n, s, m, t)] += coeff

    def field_terms(row, n, s, m, t):
        add(row, n - 1, s, m, t, E * np.sqrt(n))
        add(row, n, s, m - 1, t, E * np.sqrt(m))
        add(row, n + 1, s, m, t, -E * np.sqrt(n + 1))
        add(row, n, s, m + 1, t, -E * np.sqrt(m + 1))
        add(row, n + 1, s, m + 1, t, 2 * kappa * np.sqrt((n + 1) * (m + 1)))

    for n in range(n_max + 1):
        for m in range(n_max + 1):
            # (+, +)
            r = vidx(n, PLUS, m, PLUS)
            add(r, n + 1, MINUS, m, PLUS, -g * np.sqrt(n + 1))
            add(r, n, PLUS, m + 1, MINUS, -g * np.sqrt(m + 1))
            field_terms(r, n, PLUS, m, PLUS)
            add(r, n, PLUS, m, PLUS, -(kappa * (n + m) + gamma))
            # (-, -)
            r = vidx(n, MINUS, m, MINUS)
            add(r, n - 1, PLUS, m, MINUS, g * np.sqrt(n))
            add(r, n, MINUS, m - 1, PLUS, g * np.sqrt(m))
            field_terms(r, n, MINUS, m, MINUS)
            add(r, n, MINUS, m, MINUS, -kappa * (n + m))
            add(r, n, PLUS, m, PLUS, gamma)
            # (+, -)
            r = vidx(n, PLUS, m, MINUS)
            add(r, n + 1, PLUS if printed else MINUS, m, MINUS, -g * np.sqrt(n + 1))
            add(r, n, PLUS, m - 1, PLUS, g * np.sqrt(m))
            field_terms(r, n, PLUS, m, MINUS)
            half = -gamma / 2 if printed else gamma / 2
            add(r, n, PLUS, m, MINUS, -(kappa * (n + m) + half))

    # (-, +) block: d rho_{n-;m+} = conj(d rho_{m+;n-}); the coefficients are
    # real, so conjugation only transposes the indices of every source element.
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            src_row = vidx(m, PLUS, n, MINUS)
            dst_row = vidx(n, MINUS, m, PLUS)
            for col in np.flatnonzero(L[src_row]):
                i, j = col % dim, col // dim
                L[dst_row, j + dim * i] += L[src_row, col]
    return L


def weak_field_g2_zero(g, kappa, E, gamma=1.0):
    """g2(0) from lowest-order steady amplitudes of the no-jump evolution.

    ``psi = |0g> + E psi_1 + E**2 psi_2``; each order solves
    ``H_eff psi_k = -(drive term acting on psi_{k-1})`` inside its manifold.
    """
    # One excitation: |1g>, |0e>;  <1g|H|0e> = i g
    H1 = np.array([[-1j * kappa, 1j * g], [-1j * g, -0.5j * gamma]])
    src1 = np.array([1j, 0.0])  # i E a+ |0g>, divided by E
    c1 = np.linalg.solve(H1, -src1)
    # Two excitations: |2g>, |1e>
    s2 = np.sqrt(2)
    H2 = np.array([[-2j * kappa, 1j * g * s2], [-1j * g * s2, -1j * (kappa + 0.5 * gamma)]])
    src2 = np.array([1j * s2 * c1[0], 1j * c1[1]])
    c2 = np.linalg.solve(H2, -src2)
    n1 = abs(c1[0]) ** 2
    return 2 * abs(c2[0]) ** 2 / n1**2
