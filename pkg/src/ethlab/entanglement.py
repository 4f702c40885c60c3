"""Reduced density matrices and von Neumann entropy (base 2 throughout)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRACE_TOL = 1e-8
EIGENVALUE_HARD_FLOOR = -1e-8   # below this a reduced matrix is considered broken
EIGENVALUE_SKIP = 1e-14


@dataclass
class ReducedDensityMatrix:
    sites: tuple
    matrix: np.ndarray


def _subsystem_matrix(amplitudes: np.ndarray, sites, L: int, d: int) -> np.ndarray:
    """Reshape a pure state into (d^k, d^(L-k)) with `sites` axes leading."""
    sites = tuple(sites)
    if not sites:
        raise ValueError("sites must be nonempty")
    if len(set(sites)) != len(sites):
        raise ValueError("sites must be distinct")
    if any(s < 1 or s > L for s in sites):
        raise ValueError(f"sites {sites} out of range 1..{L}")
    tensor = np.asarray(amplitudes).reshape((d,) * L)
    axes = [s - 1 for s in sites]
    tensor = np.moveaxis(tensor, axes, range(len(axes)))
    return tensor.reshape(d ** len(sites), -1)


def reduce(state, sites, L: int, d: int) -> ReducedDensityMatrix:
    """Partial trace of a pure state onto `sites` (1-based site labels).

    Works by index-arithmetic reshaping; the full density matrix is never
    materialized.
    """
    amplitudes = getattr(state, "amplitudes", state)
    M = _subsystem_matrix(amplitudes, sites, L, d)
    return ReducedDensityMatrix(tuple(sites), M @ M.conj().T)


def site_rdms(vectors: np.ndarray, site: int, L: int, d: int) -> np.ndarray:
    """Single-site reduced matrices of many pure states at once.

    `vectors` has shape (d**L, k); returns an array of shape (k, d, d).
    """
    if not 1 <= site <= L:
        raise ValueError(f"site {site} out of range 1..{L}")
    a = d ** (site - 1)
    b = d ** (L - site)
    k = vectors.shape[1]
    T = np.ascontiguousarray(vectors).reshape(a, d, b, k)
    return np.einsum("xsyk,xtyk->kst", T, T.conj(), optimize=True)


def mixed_reduce(weights, spec, sites, chunk: int = 256) -> ReducedDensityMatrix:
    """Reduced matrix of the mixed state sum_i w_i |E_i><E_i|."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or len(weights) != spec.n_levels:
        raise ValueError("weights must align with the spectrum")
    sites = tuple(sites)
    d = spec.site_dim
    k = len(sites)
    rho = np.zeros((d ** k, d ** k), dtype=complex)
    for start in range(0, spec.n_levels, chunk):
        idx = np.arange(start, min(start + chunk, spec.n_levels))
        w = weights[idx]
        if not np.any(w):
            continue
        U = spec.eigenstates_full(idx)
        tensor = np.ascontiguousarray(U.T).reshape((len(idx),) + (d,) * spec.L)
        axes = [s for s in sites]
        tensor = np.moveaxis(tensor, axes, range(1, 1 + k))
        M = tensor.reshape(len(idx), d ** k, -1)
        rho += np.einsum("nar,nbr,n->ab", M, M.conj(), w, optimize=True)
    if np.max(np.abs(rho.imag)) < 1e-15:
        rho = rho.real
    return ReducedDensityMatrix(sites, rho)


def rdm_entropies(rdms: np.ndarray) -> np.ndarray:
    """Von Neumann entropies in bits of a batch of density matrices (k, d, d)."""
    lam = np.linalg.eigvalsh(rdms)
    if np.min(lam) < EIGENVALUE_HARD_FLOOR:
        raise ValueError(f"density matrix eigenvalue {np.min(lam):.3e} below "
                         f"{EIGENVALUE_HARD_FLOOR}; not a state")
    lam = np.clip(lam, 0.0, None)
    terms = np.where(lam > EIGENVALUE_SKIP, lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0)
    return -np.sum(terms, axis=-1)


def von_neumann_entropy(rho) -> float:
    """Entropy -sum lam log2 lam of a density matrix, skipping lam < 1e-14."""
    matrix = getattr(rho, "matrix", rho)
    tr = float(np.real(np.trace(matrix)))
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"trace {tr} deviates from 1 by more than {TRACE_TOL}")
    return float(rdm_entropies(np.asarray(matrix)[None, :, :])[0])


def eigenstate_site_rdms(spec, site: int, chunk: int = 256) -> np.ndarray:
    """Single-site reduced matrices of every eigenstate, shape (n, d, d).

    Precomputing these makes thermal predictions over parameter grids cheap:
    the site matrix of any diagonal-weight mixture is weights @ rdms.
    """
    d = spec.site_dim
    out = np.empty((spec.n_levels, d, d), dtype=complex)
    for start in range(0, spec.n_levels, chunk):
        idx = np.arange(start, min(start + chunk, spec.n_levels))
        U = spec.eigenstates_full(idx)
        out[idx] = site_rdms(U, site, spec.L, d)
    return out


def weighted_site_entropy(weights: np.ndarray, rdms: np.ndarray) -> float:
    """Entropy in bits of sum_i w_i rho_i given precomputed site matrices."""
    rho = np.tensordot(np.asarray(weights, dtype=float), rdms, axes=(0, 0))
    return float(rdm_entropies(rho[None, :, :])[0])
