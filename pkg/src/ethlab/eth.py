"""Operator statistics in the energy eigenbasis: scatter plots, diagonal
dominance, counter-diagonal suppression, and scaling fits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .entanglement import rdm_entropies, site_rdms
from .operators import OperatorMatrix, SIGMA_X, embed_at_site

# ideal entropic suppression of the counter-diagonal for a qubit chain at the
# spectral center, where the thermodynamic entropy is log(2^L)
IDEAL_QUBIT_DECAY = -np.log(2.0) / 2.0


@dataclass
class EthMatrixData:
    elements: np.ndarray
    energies: np.ndarray
    entropy_scale: float


def energy_basis_elements(spec, O: OperatorMatrix) -> EthMatrixData:
    """All matrix elements <E_i|O|E_j> plus the mid-spectrum entropy scale
    (log of the number of levels)."""
    A = spec.op_matrix(O)
    return EthMatrixData(A, np.asarray(spec.energies),
                         float(np.log(spec.n_levels)))


def eigenstate_scatter(spec, O: OperatorMatrix | None = None,
                       site: int | None = None, chunk: int = 256):
    """Per-eigenstate values paired with energies.

    Pass an operator for expectation values, or `site` for the single-site
    entanglement entropy of every eigenstate.
    """
    if (O is None) == (site is None):
        raise ValueError("pass exactly one of O or site")
    if O is not None:
        return np.asarray(spec.energies), spec.op_diagonal(O)
    values = np.empty(spec.n_levels)
    for start in range(0, spec.n_levels, chunk):
        idx = np.arange(start, min(start + chunk, spec.n_levels))
        U = spec.eigenstates_full(idx)
        values[idx] = rdm_entropies(site_rdms(U, site, spec.L, spec.site_dim))
    return np.asarray(spec.energies), values


class RatioResult(NamedTuple):
    ratio: float
    infinite: bool


def diag_offdiag_ratio(data: EthMatrixData) -> RatioResult:
    """Mean |diagonal| over mean |off-diagonal| of the energy-basis matrix."""
    A = np.abs(data.elements)
    n = A.shape[0]
    if n < 2:
        raise ValueError("need dimension >= 2")
    diag_mean = np.trace(A) / n
    off_mean = (A.sum() - np.trace(A)) / (n * (n - 1))
    if off_mean == 0.0:
        return RatioResult(np.inf, True)
    return RatioResult(float(diag_mean / off_mean), False)


def counter_diagonal_average(data: EthMatrixData) -> float:
    """Mean |<E_i|O|E_i'>| along the counter-diagonal i' = dim + 1 - i.

    Defined for the qubit chain, so the dimension must be a power of two.
    """
    n = data.elements.shape[0]
    if n < 2 or (n & (n - 1)) != 0:
        raise ValueError(f"counter-diagonal average needs a 2^L-dimensional "
                         f"space, got {n}")
    A = data.elements
    vals = np.abs(A[np.arange(n), n - 1 - np.arange(n)])
    return float(vals.mean())


class FitResult(NamedTuple):
    slope: float
    intercept: float
    residual: float


def scaling_fit(points, log_scale: bool = False) -> FitResult:
    """Ordinary least squares of value (or ln value) against system size."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (L, value) points")
    x, y = pts[:, 0], pts[:, 1]
    if log_scale:
        if np.any(y <= 0):
            raise ValueError("log-scale fit needs positive values")
        y = np.log(y)
    design = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(res[0]) if len(res) else 0.0
    return FitResult(float(coef[0]), float(coef[1]), residual)


def haar_qubit_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary via QR with the phase convention fixed."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_site_operator(L: int, rng: np.random.Generator) -> OperatorMatrix:
    """A random single-site operator with the Pauli spectrum {-1, +1}.

    U^dag diag(-1, +1) U for Haar-random U, embedded at a uniformly random
    site of the qubit chain.
    """
    u = haar_qubit_unitary(rng)
    local = u.conj().T @ np.diag([-1.0, 1.0]) @ u
    local = 0.5 * (local + local.conj().T)
    site = int(rng.integers(1, L + 1))
    from .operators import LocalOperator
    return embed_at_site(LocalOperator("random_spin", 2, local), site, L)


def sigma_x_product(L: int) -> OperatorMatrix:
    """The global operator prod_r sigma_x^(r) (same spectrum as sigma_x)."""
    m = embed_at_site(SIGMA_X, 1, L).matrix
    for r in range(2, L + 1):
        m = m @ embed_at_site(SIGMA_X, r, L).matrix
    from .operators import _wrap
    return _wrap(m, L, 2, "sigma_x_product")
