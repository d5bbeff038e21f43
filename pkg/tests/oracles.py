"""Independent reference dynamics: dense generators exponentiated with expm.

Nothing here imports the kernels under test; operators are assembled from
Kronecker products in the declared basis order (ion 1 most significant, bus
number fastest).
"""

import itertools

import numpy as np
from scipy.linalg import expm

SIGMA_SD = np.array([[0, 1], [0, 0]], dtype=complex)  # |S><D|
PROJ_D = np.array([[0, 0], [0, 1]], dtype=complex)


def annihilation(n_max):
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def embed(op_ion, ion, num_ions, bus_op):
    ops = [np.eye(2, dtype=complex)] * num_ions
    ops[ion - 1] = op_ion
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return np.kron(out, bus_op)


def carrier_unitary(ion, theta, phi, num_ions=2, n_max=8):
    g = embed(np.exp(1j * phi) * SIGMA_SD, ion, num_ions, np.eye(n_max + 1))
    return expm(-0.5j * theta * (g + g.conj().T))


def blue_unitary(ion, theta, phi, num_ions=2, n_max=8):
    g = embed(np.exp(1j * phi) * SIGMA_SD, ion, num_ions, annihilation(n_max))
    return expm(-0.5j * theta * (g + g.conj().T))


def d_phase_unitary(ion, phase, num_ions=2, n_max=8):
    g = embed(PROJ_D, ion, num_ions, np.eye(n_max + 1))
    return expm(-1j * phase * g)


def enumerate_basis(num_ions, n_max):
    """Brute-force basis listing in the declared order."""
    return [(q, n) for q in itertools.product("SD", repeat=num_ions) for n in range(n_max + 1)]


def basis_vector(qubits, n, num_ions=2, n_max=8):
    v = np.zeros(2**num_ions * (n_max + 1), dtype=complex)
    v[enumerate_basis(num_ions, n_max).index((tuple(qubits), n))] = 1
    return v


def two_by_two(theta, phi):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * np.exp(1j * phi) * s], [-1j * np.exp(-1j * phi) * s, c]])
