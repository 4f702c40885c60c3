"""Symmetry operators and block decomposition of the Hilbert space.

Charge sectors are read off directly from the computational basis (number of
trits equal to 2), and parity sectors are assembled from orbit pairs
{b, reverse(b)}; neither symmetry is diagonalized numerically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .operators import (OperatorMatrix, _wrap, basis_digits, charge_of_basis,
                        reversal_permutation)

COMMUTATION_TOL = 1e-10


class NonCommutingSymmetryError(ValueError):
    """A requested symmetry does not commute with the Hamiltonian."""


@dataclass(frozen=True)
class SectorLabel:
    parity: int | None = None
    charge: int | None = None

    def __post_init__(self):
        if self.parity is None and self.charge is None:
            raise ValueError("a sector label needs at least one quantum number")
        if self.parity is not None and self.parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        if self.charge is not None and self.charge < 0:
            raise ValueError("charge must be a non-negative integer")

    def __str__(self):
        parts = []
        if self.charge is not None:
            parts.append(f"Q={self.charge}")
        if self.parity is not None:
            parts.append(f"P={'+1' if self.parity > 0 else '-1'}")
        return ",".join(parts)


@dataclass
class SectorBlock:
    """A symmetry block: orthonormal basis columns and the restricted matrix."""

    label: SectorLabel | None
    basis: sp.csc_matrix | None   # (full_dim x block_dim); None means full space
    block: np.ndarray
    L: int
    site_dim: int

    @property
    def dim(self) -> int:
        return self.block.shape[0]

    @property
    def full_dim(self) -> int:
        return self.site_dim ** self.L


def build_parity(L: int, dim: int) -> OperatorMatrix:
    """Site-reversal permutation operator P (sends site r to L+1-r); P^2 = I."""
    perm = reversal_permutation(L, dim)
    n = dim ** L
    m = sp.csr_matrix((np.ones(n), (perm, np.arange(n))), shape=(n, n))
    return _wrap(m, L, dim, "parity")


def commutator_maxnorm(A: sp.spmatrix, B: sp.spmatrix) -> float:
    delta = A @ B - B @ A
    if hasattr(delta, "nnz") and delta.nnz == 0:
        return 0.0
    return float(np.max(np.abs(delta.data))) if hasattr(delta, "data") else float(np.max(np.abs(delta)))


def full_block(H: OperatorMatrix) -> SectorBlock:
    """Wrap the full-space Hamiltonian as a single trivial block."""
    return SectorBlock(None, None, H.dense(), H.L, H.site_dim)


def _parity_basis_for(indices: np.ndarray, perm: np.ndarray):
    """Split a reversal-invariant index set into +1/-1 orbit-pair bases.

    Fixed points (palindromes) go to the +1 sector; each pair {b, rev(b)}
    yields one symmetric and one antisymmetric combination.
    """
    index_set = set(int(i) for i in indices)
    plus_cols, minus_cols = [], []
    s = 1.0 / np.sqrt(2.0)
    for b in indices:
        rb = int(perm[b])
        if rb not in index_set:
            raise ValueError("index set is not closed under site reversal")
        if rb == b:
            plus_cols.append(([int(b)], [1.0]))
        elif b < rb:
            plus_cols.append(([int(b), rb], [s, s]))
            minus_cols.append(([int(b), rb], [s, -s]))
    return plus_cols, minus_cols


def _columns_to_sparse(cols, full_dim) -> sp.csc_matrix:
    rows, col_ids, vals = [], [], []
    for j, (r, v) in enumerate(cols):
        rows.extend(r)
        col_ids.extend([j] * len(r))
        vals.extend(v)
    return sp.csc_matrix((vals, (rows, col_ids)), shape=(full_dim, len(cols)))


def _restrict(H: sp.csr_matrix, basis: sp.csc_matrix) -> np.ndarray:
    block = (basis.T.conjugate() @ H @ basis).toarray()
    if np.iscomplexobj(block) and (block.size == 0 or np.max(np.abs(block.imag)) == 0.0):
        block = block.real
    return block


def decompose(H: OperatorMatrix, symmetries: list[OperatorMatrix]) -> list[SectorBlock]:
    """Split H into joint symmetry blocks.

    Supported symmetries are the operators produced by `build_parity` (name
    'parity') and `build_charge_operators` (name 'total_charge').  Each must
    commute with H to COMMUTATION_TOL in max-entry norm; the symmetries also
    have to commute among themselves.
    """
    use_parity = use_charge = False
    for S in symmetries:
        norm = commutator_maxnorm(H.matrix, S.matrix)
        if norm > COMMUTATION_TOL:
            raise NonCommutingSymmetryError(
                f"[H, {S.name}] has max-entry norm {norm:.3e} > {COMMUTATION_TOL}")
        if S.name == "parity":
            use_parity = True
        elif S.name == "total_charge":
            use_charge = True
        else:
            raise ValueError(f"unsupported symmetry {S.name!r}")
    for i, S1 in enumerate(symmetries):
        for S2 in symmetries[i + 1:]:
            norm = commutator_maxnorm(S1.matrix, S2.matrix)
            if norm > COMMUTATION_TOL:
                raise NonCommutingSymmetryError(
                    f"[{S1.name}, {S2.name}] has max-entry norm {norm:.3e}")

    L, d = H.L, H.site_dim
    full_dim = d ** L
    groups: list[tuple[int | None, np.ndarray]] = []
    if use_charge:
        if d != 3:
            raise ValueError("charge sectors are defined for qutrit chains")
        charges = charge_of_basis(L)
        for n in range(L + 1):
            groups.append((n, np.nonzero(charges == n)[0]))
    else:
        groups.append((None, np.arange(full_dim)))

    blocks: list[SectorBlock] = []
    Hm = H.matrix
    if use_parity:
        perm = reversal_permutation(L, d)
        for q, idx in groups:
            plus_cols, minus_cols = _parity_basis_for(idx, perm)
            for par, cols in ((1, plus_cols), (-1, minus_cols)):
                if not cols:
                    continue
                basis = _columns_to_sparse(cols, full_dim)
                blocks.append(SectorBlock(SectorLabel(parity=par, charge=q),
                                          basis, _restrict(Hm, basis), L, d))
    else:
        for q, idx in groups:
            basis = sp.csc_matrix(
                (np.ones(len(idx)), (idx, np.arange(len(idx)))),
                shape=(full_dim, len(idx)))
            block = Hm[np.ix_(idx, idx)].toarray()
            if np.iscomplexobj(block) and (block.size == 0 or np.max(np.abs(block.imag)) == 0.0):
                block = block.real
            blocks.append(SectorBlock(SectorLabel(charge=q) if q is not None else None,
                                      basis, block, L, d))
    return blocks


def charge_sector_dimension(L: int, n: int) -> int:
    """Dimension of the total-charge-n sector: 2^(L-n) * C(L, n)."""
    from math import comb
    return 2 ** (L - n) * comb(L, n)
