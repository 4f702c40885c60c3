"""Independent oracles shared by the test modules.

Everything here is written from scratch against the definitions (index
arithmetic, literal matrices, textbook sampling) rather than calling back
into the library paths under test.
"""
import numpy as np

# independently typed literals for the 3x3 generator basis
GELL_MANN_LITERALS = {
    1: np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex),
    2: np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex),
    3: np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex),
    4: np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex),
    5: np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex),
    6: np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex),
    7: np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex),
    8: np.array([[1, 0, 0], [0, 1, 0], [0, 0, -2]], dtype=complex) / np.sqrt(3),
}

PAULI_LITERALS = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def digits(index, L, d):
    """Base-d digits of a basis index, site 1 first (most significant)."""
    out = []
    for r in range(L - 1, -1, -1):
        out.append((index // d ** r) % d)
    return out


def embed_oracle(local, site, L, d):
    """Entry-by-entry construction of I x ... x local x ... x I."""
    dim = d ** L
    out = np.zeros((dim, dim), dtype=complex)
    for u in range(dim):
        du = digits(u, L, d)
        for v in range(dim):
            dv = digits(v, L, d)
            if all(du[r] == dv[r] for r in range(L) if r != site - 1):
                out[u, v] = local[du[site - 1], dv[site - 1]]
    return out


def index_of(digit_list, d):
    idx = 0
    for s in digit_list:
        idx = idx * d + s
    return idx


def sample_goe(n, rng):
    """GOE matrix: symmetric, off-diagonal variance 1, diagonal variance 2."""
    A = rng.standard_normal((n, n))
    return (A + A.T) / np.sqrt(2.0)


def poisson_levels(n, rng):
    """Uncorrelated spectrum: cumulative sum of unit-mean exponential gaps."""
    return np.cumsum(rng.exponential(1.0, size=n))
