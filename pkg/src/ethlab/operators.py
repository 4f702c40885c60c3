"""Local site operators and assembly of the qubit/qutrit chain Hamiltonians.

All matrices over the full product basis are built as sparse matrices with
site 1 as the most-significant tensor factor: the computational basis state
|s_1 s_2 ... s_L> has index  sum_r s_r * d**(L-r).
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import scipy.sparse as sp

# Dense conversion guard: sector blocks above this dimension are refused so a
# stray config cannot silently allocate a 3^12-sized dense matrix.
DENSE_LIMIT = 20000

HERMITICITY_TOL = 1e-12


class DimensionLimitError(RuntimeError):
    """Raised when an operation would densify a matrix above DENSE_LIMIT."""


# ---------------------------------------------------------------------------
# local (single-site) operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalOperator:
    """A named Hermitian operator on a single d-dimensional site."""

    name: str
    dim: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"{self.name}: entries must be {self.dim}x{self.dim}")
        if np.max(np.abs(m - m.conj().T)) > 1e-14:
            raise ValueError(f"{self.name}: not Hermitian")
        object.__setattr__(self, "entries", m)


def _lop(name, dim, rows):
    return LocalOperator(name, dim, np.array(rows, dtype=complex))


SIGMA_X = _lop("sigma_x", 2, [[0, 1], [1, 0]])
SIGMA_Y = _lop("sigma_y", 2, [[0, -1j], [1j, 0]])
SIGMA_Z = _lop("sigma_z", 2, [[1, 0], [0, -1]])

# 3x3 generator basis, lambda_1 ... lambda_8
LAMBDA = {
    1: _lop("lambda_1", 3, [[0, 1, 0], [1, 0, 0], [0, 0, 0]]),
    2: _lop("lambda_2", 3, [[0, -1j, 0], [1j, 0, 0], [0, 0, 0]]),
    3: _lop("lambda_3", 3, [[1, 0, 0], [0, -1, 0], [0, 0, 0]]),
    4: _lop("lambda_4", 3, [[0, 0, 1], [0, 0, 0], [1, 0, 0]]),
    5: _lop("lambda_5", 3, [[0, 0, -1j], [0, 0, 0], [1j, 0, 0]]),
    6: _lop("lambda_6", 3, [[0, 0, 0], [0, 0, 1], [0, 1, 0]]),
    7: _lop("lambda_7", 3, [[0, 0, 0], [0, 0, -1j], [0, 1j, 0]]),
    8: _lop("lambda_8", 3, np.diag([1, 1, -2]) / np.sqrt(3)),
}

# local charge: projector onto the third slot |2>
CHARGE_Q = _lop("q", 3, [[0, 0, 0], [0, 0, 0], [0, 0, 1]])

_REGISTRY = {
    "sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z,
    "sx": SIGMA_X, "sy": SIGMA_Y, "sz": SIGMA_Z,
    "q": CHARGE_Q,
    **{f"lambda{i}": LAMBDA[i] for i in LAMBDA},
    **{f"lambda_{i}": LAMBDA[i] for i in LAMBDA},
}


def local_operator(name: str) -> LocalOperator:
    """Look up a named single-site operator (sx, sy, sz, lambda1..8, q)."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown local operator {name!r}") from None


# ---------------------------------------------------------------------------
# basis index arithmetic
# ---------------------------------------------------------------------------

def basis_digits(L: int, d: int) -> np.ndarray:
    """Base-d digits of all basis indices, shape (d**L, L), site 1 in column 0."""
    idx = np.arange(d ** L)
    out = np.empty((d ** L, L), dtype=np.uint8)
    for r in range(L - 1, -1, -1):
        out[:, r] = idx % d
        idx = idx // d
    return out


def reversal_permutation(L: int, d: int) -> np.ndarray:
    """Index map of the site-reversal r -> L+1-r on the computational basis."""
    digits = basis_digits(L, d)
    powers = d ** np.arange(L - 1, -1, -1, dtype=np.int64)
    return digits[:, ::-1].astype(np.int64) @ powers


def charge_of_basis(L: int) -> np.ndarray:
    """Total charge (number of trits equal to 2) of each qutrit basis index."""
    return np.count_nonzero(basis_digits(L, 3) == 2, axis=1).astype(np.int64)


# ---------------------------------------------------------------------------
# full-space operators
# ---------------------------------------------------------------------------

@dataclass
class OperatorMatrix:
    """Sparse Hermitian operator on the full L-site product space."""

    matrix: sp.csr_matrix
    L: int
    site_dim: int
    name: str = ""

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix)
        if np.iscomplexobj(m.data):
            if m.nnz == 0 or np.max(np.abs(m.data.imag)) == 0.0:
                m = sp.csr_matrix((m.data.real, m.indices, m.indptr), shape=m.shape)
        m.sort_indices()
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix.data)

    def dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        if self.dim > limit:
            raise DimensionLimitError(
                f"refusing to densify {self.name or 'operator'} of dimension "
                f"{self.dim} (limit {limit})")
        return self.matrix.toarray()

    def hermiticity_defect(self) -> float:
        delta = self.matrix - self.matrix.conjugate().T
        return 0.0 if delta.nnz == 0 else np.max(np.abs(delta.data))

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.matrix @ psi)))

    def export_coordinate_text(self, path) -> None:
        """Write nonzero entries as 'row col re im' lines for cross-checking."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w") as fh:
            fh.write(f"# dim {self.dim} nnz {coo.nnz}\n")
            for k in order:
                v = complex(coo.data[k])
                fh.write(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}\n")


def _wrap(matrix, L, d, name=""):
    return OperatorMatrix(sp.csr_matrix(matrix), L, d, name)


def identity_matrix(L: int, d: int) -> OperatorMatrix:
    return _wrap(sp.identity(d ** L, dtype=float, format="csr"), L, d, "identity")


def embed_at_site(op: LocalOperator, site: int, L: int, dim: int | None = None) -> OperatorMatrix:
    """Embed a local operator at `site` (1-based): I x ... x op x ... x I.

    Site 1 is the most-significant tensor factor.
    """
    d = op.dim if dim is None else dim
    if op.dim != d:
        raise ValueError(f"operator dimension {op.dim} != site dimension {d}")
    if not 1 <= site <= L:
        raise ValueError(f"site {site} out of range 1..{L}")
    left = sp.identity(d ** (site - 1), dtype=float, format="csr")
    right = sp.identity(d ** (L - site), dtype=float, format="csr")
    m = sp.kron(sp.kron(left, sp.csr_matrix(op.entries)), right, format="csr")
    return _wrap(m, L, d, f"{op.name}({site})")


def embed_pair(entries: np.ndarray, site: int, L: int, d: int, name: str = "") -> OperatorMatrix:
    """Embed a two-site operator (d^2 x d^2) acting on sites (site, site+1)."""
    if not 1 <= site <= L - 1:
        raise ValueError(f"pair site {site} out of range 1..{L - 1}")
    left = sp.identity(d ** (site - 1), dtype=float, format="csr")
    right = sp.identity(d ** (L - site - 1), dtype=float, format="csr")
    m = sp.kron(sp.kron(left, sp.csr_matrix(entries)), right, format="csr")
    return _wrap(m, L, d, name or f"pair({site},{site + 1})")


# ---------------------------------------------------------------------------
# Hamiltonian specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianSpec:
    """Declarative description of a qubit or qutrit chain.

    Qubit fields (h_x, h_z) and qutrit fields (h1, h2, h3, a, spread_*) both
    carry the standard chaotic defaults; only the set matching `kind` enters
    the Hamiltonian.  `seed` fixes the charge-spread coefficients c_i^(r).
    """

    kind: str
    L: int
    J: float = 1.0
    h_x: float = 1.05
    h_z: float = 0.5
    h1: float = 1.05
    h2: float = 0.0
    h3: float = 0.5
    a: float = 1.0
    spread_mean: float = 1.0
    spread_width: float = 0.1
    seed: int = 0
    normalize_by_L: bool = True

    def __post_init__(self):
        if self.kind not in ("qubit", "qutrit"):
            raise ValueError(f"kind must be 'qubit' or 'qutrit', got {self.kind!r}")
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if self.spread_width < 0:
            raise ValueError("spread_width must be >= 0")

    @property
    def site_dim(self) -> int:
        return 2 if self.kind == "qubit" else 3

    @property
    def dim(self) -> int:
        return self.site_dim ** self.L

    def charge_spread_coeffs(self) -> np.ndarray:
        """The seeded coefficients c_i^(r), shape (L-1, 4), row-major in r."""
        rng = np.random.default_rng(self.seed)
        return rng.normal(self.spread_mean, self.spread_width, size=(self.L - 1, 4))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "HamiltonianSpec":
        return cls(**data)


def qubit_core_of(spec: HamiltonianSpec) -> HamiltonianSpec:
    """The qubit chain with the same couplings as a qutrit spec's qubit part."""
    return HamiltonianSpec(kind="qubit", L=spec.L, J=spec.J, h_x=spec.h1,
                           h_z=spec.h3, normalize_by_L=spec.normalize_by_L)


# ---------------------------------------------------------------------------
# chain Hamiltonians
# ---------------------------------------------------------------------------

def build_qubit_hamiltonian(spec: HamiltonianSpec) -> OperatorMatrix:
    """Open-chain Ising Hamiltonian with transverse and parallel fields.

    H = (J sum sz.sz + h_x sum sx + h_z sum sz) / L  (the 1/L factor is
    dropped when normalize_by_L is false).
    """
    if spec.kind != "qubit":
        raise ValueError("spec.kind must be 'qubit'")
    L = spec.L
    zz = SIGMA_Z.entries.real
    pair = np.kron(zz, zz)
    terms = []
    for r in range(1, L):
        terms.append(spec.J * embed_pair(pair, r, L, 2).matrix)
    for r in range(1, L + 1):
        terms.append(spec.h_x * embed_at_site(SIGMA_X, r, L).matrix)
        terms.append(spec.h_z * embed_at_site(SIGMA_Z, r, L).matrix)
    H = sum(terms)
    if spec.normalize_by_L:
        H = H / L
    H.eliminate_zeros()
    return _wrap(H, L, 2, "H_qubit")


def charge_spread_pair_ops() -> list[np.ndarray]:
    """The four Hermitian two-site charge movers built from lambda_{4..7}.

    dq1 = l4 x l4 + l5 x l5,  dq2 = l4 x l6 + l5 x l7,
    dq3 = l6 x l4 + l7 x l5,  dq4 = l6 x l6 + l7 x l7.
    All are real and conserve the summed two-site charge.
    """
    l4, l5 = LAMBDA[4].entries, LAMBDA[5].entries
    l6, l7 = LAMBDA[6].entries, LAMBDA[7].entries
    ops = [
        np.kron(l4, l4) + np.kron(l5, l5),
        np.kron(l4, l6) + np.kron(l5, l7),
        np.kron(l6, l4) + np.kron(l7, l5),
        np.kron(l6, l6) + np.kron(l7, l7),
    ]
    return [op.real for op in ops]


def build_charge_spread(L: int, coeffs: np.ndarray) -> OperatorMatrix:
    """Total charge-spreading operator sum_r sum_i c_i^(r) dq_i^(r,r+1)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (L - 1, 4):
        raise ValueError(f"coeffs must have shape ({L - 1}, 4), got {coeffs.shape}")
    pair_ops = charge_spread_pair_ops()
    total = sp.csr_matrix((3 ** L, 3 ** L), dtype=float)
    for r in range(1, L):
        local = sum(coeffs[r - 1, i] * pair_ops[i] for i in range(4))
        total = total + embed_pair(local, r, L, 3).matrix
    total.eliminate_zeros()
    return _wrap(total, L, 3, "charge_spread")


def build_qutrit_hamiltonian(spec: HamiltonianSpec) -> OperatorMatrix:
    """Qutrit chain: the qubit Hamiltonian mapped onto lambda_{1,2,3} plus the
    charge-spreading term a * sum_r sum_i c_i^(r) dq_i^(r,r+1), divided by L
    when normalize_by_L."""
    if spec.kind != "qutrit":
        raise ValueError("spec.kind must be 'qutrit'")
    L = spec.L
    l3 = LAMBDA[3].entries.real
    pair = np.kron(l3, l3)
    terms = []
    for r in range(1, L):
        terms.append(spec.J * embed_pair(pair, r, L, 3).matrix)
    for r in range(1, L + 1):
        if spec.h1:
            terms.append(spec.h1 * embed_at_site(LAMBDA[1], r, L).matrix)
        if spec.h2:
            terms.append(spec.h2 * embed_at_site(LAMBDA[2], r, L).matrix)
        if spec.h3:
            terms.append(spec.h3 * embed_at_site(LAMBDA[3], r, L).matrix)
    H = sum(terms)
    if spec.a:
        H = H + spec.a * build_charge_spread(L, spec.charge_spread_coeffs()).matrix
    if spec.normalize_by_L:
        H = H / L
    H.eliminate_zeros()
    return _wrap(H, L, 3, "H_qutrit")


def build_hamiltonian(spec: HamiltonianSpec) -> OperatorMatrix:
    if spec.kind == "qubit":
        return build_qubit_hamiltonian(spec)
    return build_qutrit_hamiltonian(spec)


def build_charge_operators(L: int) -> tuple[list[OperatorMatrix], OperatorMatrix]:
    """Local charges q^(r) (projector onto |2> at site r) and the total Q."""
    locals_ = [embed_at_site(CHARGE_Q, r, L) for r in range(1, L + 1)]
    total = sp.diags(charge_of_basis(L).astype(float), format="csr")
    return locals_, _wrap(total, L, 3, "total_charge")
