"""Eigendecomposition of sector blocks and level-spacing statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .operators import DENSE_LIMIT, DimensionLimitError, OperatorMatrix
from .sectors import SectorBlock, SectorLabel, decompose, full_block

DEGENERACY_GAP_FACTOR = 1e-10


class InsufficientLevelsError(ValueError):
    pass


class IllConditionedFitError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# spectral data: one block
# ---------------------------------------------------------------------------

@dataclass
class SpectralData:
    """Eigenvalues/eigenvectors of one block, with the embedding back to the
    full product space (`basis` is None for a full-space decomposition)."""

    energies: np.ndarray
    vectors: np.ndarray
    L: int
    site_dim: int
    sector: SectorLabel | None = None
    basis: sp.csc_matrix | None = None

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    @property
    def full_dim(self) -> int:
        return self.site_dim ** self.L

    @property
    def charge(self) -> int | None:
        return None if self.sector is None else self.sector.charge

    @property
    def charges(self) -> np.ndarray | None:
        q = self.charge
        if q is None:
            return None
        return np.full(self.n_levels, q, dtype=float)

    def project(self, psi: np.ndarray) -> np.ndarray:
        """Energy-basis coefficients c_i = <E_i|psi> of a full-space vector."""
        block_psi = psi if self.basis is None else self.basis.T.conjugate() @ psi
        return self.vectors.conj().T @ block_psi

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Full-space vector(s) from energy-basis coefficients (n,) or (n, T)."""
        block = self.vectors @ coeffs
        return block if self.basis is None else self.basis @ block

    def eigenstates_full(self, indices=None) -> np.ndarray:
        cols = self.vectors if indices is None else self.vectors[:, indices]
        return cols if self.basis is None else np.asarray(self.basis @ cols)

    def op_diagonal(self, O: OperatorMatrix) -> np.ndarray:
        """Diagonal matrix elements <E_i|O|E_i> for all levels."""
        U = self.eigenstates_full()
        W = O.matrix @ U
        return np.real(np.einsum("ki,ki->i", U.conj(), W))

    def op_matrix(self, O: OperatorMatrix) -> np.ndarray:
        """Full matrix <E_i|O|E_j> (dense, size n_levels^2)."""
        U = self.eigenstates_full()
        A = U.conj().T @ (O.matrix @ U)
        if np.iscomplexobj(A) and (A.size == 0 or np.max(np.abs(A.imag)) < 1e-30):
            A = A.real
        return A


# ---------------------------------------------------------------------------
# spectral data: union of sector blocks
# ---------------------------------------------------------------------------

class SectorSpectra:
    """Sorted union of per-sector spectra behaving like one SpectralData.

    Levels are globally ordered by ascending energy; `project`/`synthesize`
    and the diagnostics all use that ordering.
    """

    def __init__(self, parts: list[SpectralData]):
        if not parts:
            raise ValueError("need at least one sector")
        self.parts = parts
        self.L = parts[0].L
        self.site_dim = parts[0].site_dim
        counts = [p.n_levels for p in parts]
        offsets = np.concatenate([[0], np.cumsum(counts)])
        all_e = np.concatenate([p.energies for p in parts])
        self._order = np.argsort(all_e, kind="stable")
        self._inverse = np.argsort(self._order, kind="stable")
        self.energies = all_e[self._order]
        part_ids = np.concatenate([np.full(c, k, dtype=np.int64)
                                   for k, c in enumerate(counts)])
        self._part_of = part_ids[self._order]
        self._slices = [slice(offsets[k], offsets[k + 1]) for k in range(len(parts))]
        qs = [p.charge for p in parts]
        if all(q is not None for q in qs):
            all_q = np.concatenate([np.full(c, float(q))
                                    for c, q in zip(counts, qs)])
            self.charges = all_q[self._order]
        else:
            self.charges = None

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    @property
    def full_dim(self) -> int:
        return self.site_dim ** self.L

    @property
    def sector(self):
        return None

    def project(self, psi: np.ndarray) -> np.ndarray:
        chunks = [p.project(psi) for p in self.parts]
        return np.concatenate(chunks)[self._order]

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        unsorted = np.asarray(coeffs)[self._inverse]
        out = None
        for p, sl in zip(self.parts, self._slices):
            contrib = p.synthesize(unsorted[sl])
            out = contrib if out is None else out + contrib
        return out

    def eigenstates_full(self, indices) -> np.ndarray:
        indices = np.atleast_1d(indices)
        out = np.zeros((self.full_dim, len(indices)),
                       dtype=np.result_type(*[p.vectors.dtype for p in self.parts]))
        concat_pos = self._order[indices]
        for k, (p, sl) in enumerate(zip(self.parts, self._slices)):
            mask = (concat_pos >= sl.start) & (concat_pos < sl.stop)
            if np.any(mask):
                out[:, mask] = p.eigenstates_full(concat_pos[mask] - sl.start)
        return out

    def op_diagonal(self, O: OperatorMatrix) -> np.ndarray:
        chunks = [p.op_diagonal(O) for p in self.parts]
        return np.concatenate(chunks)[self._order]

    def op_matrix(self, O: OperatorMatrix) -> np.ndarray:
        if self.n_levels > DENSE_LIMIT:
            raise DimensionLimitError(
                f"energy-basis matrix of {self.n_levels} levels exceeds the "
                f"dense limit {DENSE_LIMIT}")
        U = self.eigenstates_full(np.arange(self.n_levels))
        A = U.conj().T @ (O.matrix @ U)
        if np.iscomplexobj(A) and (A.size == 0 or np.max(np.abs(A.imag)) < 1e-30):
            A = A.real
        return A


def diagonalize(block: SectorBlock, dense_limit: int = DENSE_LIMIT) -> SpectralData:
    """Full eigendecomposition of a sector block (ascending eigenvalues)."""
    if block.dim > dense_limit:
        raise DimensionLimitError(
            f"block dimension {block.dim} exceeds dense limit {dense_limit}")
    try:
        energies, vectors = np.linalg.eigh(block.block)
    except np.linalg.LinAlgError as err:
        raise RuntimeError(f"eigendecomposition failed: {err}") from err
    return SpectralData(energies, vectors, block.L, block.site_dim,
                        block.label, block.basis)


def diagonalize_full(H: OperatorMatrix, dense_limit: int = DENSE_LIMIT) -> SpectralData:
    return diagonalize(full_block(H), dense_limit)


def diagonalize_sectors(H: OperatorMatrix, symmetries, dense_limit: int = DENSE_LIMIT):
    """Decompose H by the given symmetries and diagonalize every block."""
    blocks = decompose(H, symmetries)
    return [diagonalize(b, dense_limit) for b in blocks]


def assemble(parts: list[SpectralData]) -> SectorSpectra:
    return SectorSpectra(parts)


def diagonalize_system(ham, dense_limit: int = DENSE_LIMIT, sectors: str = "auto",
                       only_charges=None):
    """Diagonalize a chain from its HamiltonianSpec, sector by sector.

    Qubit chains split over parity, qutrit chains over total charge (which
    also attaches a definite charge to every level); `sectors='none'` forces
    a single full-space decomposition.  `only_charges` restricts a qutrit
    run to the listed sectors, e.g. when evolving a state of definite charge.
    """
    from .operators import build_charge_operators, build_hamiltonian
    from .sectors import build_parity

    H = build_hamiltonian(ham)
    if sectors == "none":
        return diagonalize_full(H, dense_limit)
    if ham.kind == "qubit":
        parts = diagonalize_sectors(H, [build_parity(ham.L, 2)], dense_limit)
        return assemble(parts)
    _, Q = build_charge_operators(ham.L)
    blocks = decompose(H, [Q])
    if only_charges is not None:
        keep = set(int(q) for q in only_charges)
        blocks = [b for b in blocks if b.label.charge in keep]
        if not blocks:
            raise ValueError(f"no charge sectors match {sorted(keep)}")
    return assemble([diagonalize(b, dense_limit) for b in blocks])


# ---------------------------------------------------------------------------
# unfolding
# ---------------------------------------------------------------------------

@dataclass
class UnfoldResult:
    spacings: np.ndarray
    n_clamped: int


def unfold(eigenvalues, degree: int = 10, trim: float = 0.025) -> UnfoldResult:
    """Map nearest-neighbor gaps to unit mean via a polynomial fit of the
    cumulative counting staircase.

    A fraction `trim` of the levels is discarded at each spectral edge, the
    staircase N(E_i) = i + 1/2 is fit with a degree-`degree` polynomial, and
    the spacings are differences of the fitted values at consecutive levels.
    Negative mapped spacings are clamped to zero (and counted); a final
    rescale pins the mean spacing at exactly 1.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    E = np.sort(np.asarray(eigenvalues, dtype=float))
    k = int(np.floor(trim * len(E)))
    Et = E[k:len(E) - k] if k > 0 else E
    if len(Et) < 50:
        raise InsufficientLevelsError(
            f"only {len(Et)} levels after trimming; need >= 50")
    staircase = np.arange(len(Et)) + 0.5
    series, diag = np.polynomial.Polynomial.fit(Et, staircase, degree, full=True)
    rank = diag[1]
    if rank < degree + 1:
        raise IllConditionedFitError(
            f"staircase fit is rank deficient (rank {rank} < {degree + 1}); "
            "reduce the polynomial degree")
    mapped = series(Et)
    s = np.diff(mapped)
    n_clamped = int(np.count_nonzero(s < 0))
    s = np.clip(s, 0.0, None)
    mean = s.mean()
    if mean <= 0:
        raise IllConditionedFitError("unfolded spacings collapsed to zero")
    return UnfoldResult(s / mean, n_clamped)


@dataclass
class SpacingDistribution:
    spacings: np.ndarray
    bin_edges: np.ndarray
    densities: np.ndarray
    mean_spacing: float
    trimmed_fraction: float
    n_clamped: int
    degenerate_fraction: float


def spacing_distribution(eigenvalues, degree: int = 10, trim: float = 0.025,
                         bins: int = 40, s_max: float = 4.0) -> SpacingDistribution:
    """Unfold a spectrum and histogram the spacings on [0, s_max]."""
    E = np.sort(np.asarray(eigenvalues, dtype=float))
    span = E[-1] - E[0]
    raw_gaps = np.diff(E)
    degenerate_fraction = float(np.mean(raw_gaps < DEGENERACY_GAP_FACTOR * span)) \
        if span > 0 else 1.0
    res = unfold(E, degree=degree, trim=trim)
    densities, edges = np.histogram(res.spacings, bins=bins, range=(0.0, s_max),
                                    density=True)
    return SpacingDistribution(res.spacings, edges, densities,
                               float(res.spacings.mean()), trim,
                               res.n_clamped, degenerate_fraction)


# ---------------------------------------------------------------------------
# reference densities
# ---------------------------------------------------------------------------

# Wigner surmise constants (A_beta, B_beta) fixed by unit normalization and
# unit mean spacing.
_SURMISE_CONSTANTS = {
    1: (np.pi / 2.0, np.pi / 4.0),
    2: (32.0 / np.pi ** 2, 4.0 / np.pi),
    4: (262144.0 / (729.0 * np.pi ** 3), 64.0 / (9.0 * np.pi)),
}


def surmise(beta: int, s):
    """Wigner surmise P_beta(s) = A_beta s^beta exp(-B_beta s^2)."""
    if beta not in _SURMISE_CONSTANTS:
        raise ValueError(f"unsupported beta {beta}; use 1 (GOE), 2 (GUE) or 4 (GSE)")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be >= 0")
    A, B = _SURMISE_CONSTANTS[beta]
    return A * s ** beta * np.exp(-B * s ** 2)


def poisson(s):
    """Poisson spacing density e^(-s) of an uncorrelated spectrum."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be >= 0")
    return np.exp(-s)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

WIGNER_DYSON = "WignerDyson"
POISSON = "Poisson"
INTERMEDIATE = "Intermediate"
DEGENERATE = "Degenerate"

DEGENERATE_FRACTION_THRESHOLD = 0.20
INTERMEDIATE_MARGIN = 0.25
REFERENCE_DENSITY_FLOOR = 1e-3
MIN_SPACINGS_FOR_CLASSIFICATION = 100


@dataclass
class SpacingClassification:
    label: str
    chi2_wigner: float
    chi2_poisson: float
    n_spacings: int
    degenerate_fraction: float
    low_confidence: bool = False


def _chi2_distance(observed, reference, mask):
    num = (observed - reference) ** 2
    den = observed + reference
    ok = mask & (den > 0)
    return float(np.sum(num[ok] / den[ok]))


def classify_spacing(dist: SpacingDistribution, beta: int = 1) -> SpacingClassification:
    """Compare the spacing histogram against Wigner-Dyson and Poisson.

    Chi-square distances are taken on the common binning, using only bins
    where either reference density exceeds REFERENCE_DENSITY_FLOOR.  A
    spectrum with more than 20% of raw gaps below 1e-10 of the spectral
    range is labeled Degenerate outright; scores within 25% of each other
    give Intermediate.
    """
    centers = 0.5 * (dist.bin_edges[:-1] + dist.bin_edges[1:])
    wd_ref = surmise(beta, centers)
    po_ref = poisson(centers)
    mask = (wd_ref > REFERENCE_DENSITY_FLOOR) | (po_ref > REFERENCE_DENSITY_FLOOR)
    chi2_w = _chi2_distance(dist.densities, wd_ref, mask)
    chi2_p = _chi2_distance(dist.densities, po_ref, mask)
    n = len(dist.spacings)
    if dist.degenerate_fraction > DEGENERATE_FRACTION_THRESHOLD:
        label = DEGENERATE
    elif abs(chi2_w - chi2_p) < INTERMEDIATE_MARGIN * max(chi2_w, chi2_p):
        label = INTERMEDIATE
    else:
        label = WIGNER_DYSON if chi2_w < chi2_p else POISSON
    return SpacingClassification(label, chi2_w, chi2_p, n,
                                 dist.degenerate_fraction,
                                 low_confidence=n < MIN_SPACINGS_FOR_CLASSIFICATION)
