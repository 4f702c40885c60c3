"""Initial-state families, exact eigenbasis evolution, and time statistics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .entanglement import rdm_entropies
from .operators import HamiltonianSpec, OperatorMatrix, basis_digits
from .utils import state_rng

NORM_TOL = 1e-12
DEFAULT_TARGET_TOL = 0.002
DEFAULT_MAX_ATTEMPTS = 2_000_000
_REJECTION_BATCH = 8192


class RejectionCapError(RuntimeError):
    def __init__(self, attempts, hits, target):
        self.acceptance_rate = hits / attempts if attempts else 0.0
        super().__init__(
            f"gave up after {attempts} samples targeting <H> = {target} "
            f"(acceptance rate {self.acceptance_rate:.2e})")


@dataclass(frozen=True)
class ProductStateSpec:
    """Recipe for a random unentangled state.

    kind 'qubit': per-site cos(theta/2)|0> + sin(theta/2) e^{i phi}|1> with
    theta uniform on [0, pi], phi on [0, 2 pi).  kind 'qutrit': per-site
    sqrt(1-f)(cos(theta)|0> + e^{i phi1} sin(theta)|1>) + e^{i phi2} sqrt(f)|2>
    with theta uniform on [0, pi/2]; f may be a scalar or per-site array.
    """

    kind: str
    L: int
    f: float | tuple = 0.0
    seed: int = 0
    target_E: float | None = None
    target_tol: float = DEFAULT_TARGET_TOL
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self):
        if self.kind not in ("qubit", "qutrit"):
            raise ValueError("kind must be 'qubit' or 'qutrit'")
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        if np.any((f < 0) | (f > 1)):
            raise ValueError("f must lie in [0, 1]")
        if f.size not in (1, self.L):
            raise ValueError("f must be a scalar or one value per site")

    def f_per_site(self) -> np.ndarray:
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        return np.full(self.L, f[0]) if f.size == 1 else f


@dataclass
class StateVector:
    """Normalized amplitudes over the full computational product basis."""

    amplitudes: np.ndarray
    L: int
    site_dim: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.site_dim ** self.L,):
            raise ValueError("amplitude vector has wrong length")
        if abs(np.linalg.norm(amp) - 1.0) > NORM_TOL:
            raise ValueError("state is not normalized")
        self.amplitudes = amp


@dataclass
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        self.times = t
        self.values = np.asarray(self.values)


# ---------------------------------------------------------------------------
# product states
# ---------------------------------------------------------------------------

def _qubit_site_amplitudes(theta, phi):
    return np.stack([np.cos(theta / 2.0),
                     np.sin(theta / 2.0) * np.exp(1j * phi)], axis=-1)


def _qutrit_site_amplitudes(theta, phi1, phi2, f):
    root = np.sqrt(1.0 - f)
    return np.stack([root * np.cos(theta),
                     root * np.sin(theta) * np.exp(1j * phi1),
                     np.sqrt(f) * np.exp(1j * phi2)], axis=-1)


def _qubit_energies(theta, phi, ham: HamiltonianSpec):
    z = np.cos(theta)
    x = np.sin(theta) * np.cos(phi)
    e = (ham.J * np.sum(z[:, :-1] * z[:, 1:], axis=1)
         + ham.h_x * np.sum(x, axis=1) + ham.h_z * np.sum(z, axis=1))
    return e / ham.L if ham.normalize_by_L else e


def _qutrit_energies(theta, phi1, phi2, f, ham: HamiltonianSpec):
    # single-site generator expectations of the product state
    g1 = 2.0 * (1.0 - f) * np.cos(theta) * np.sin(theta) * np.cos(phi1)
    g2 = 2.0 * (1.0 - f) * np.cos(theta) * np.sin(theta) * np.sin(phi1)
    g3 = (1.0 - f) * np.cos(2.0 * theta)
    cross = 2.0 * np.sqrt(f * (1.0 - f))
    g4 = cross * np.cos(theta) * np.cos(phi2)
    g5 = cross * np.cos(theta) * np.sin(phi2)
    g6 = cross * np.sin(theta) * np.cos(phi2 - phi1)
    g7 = cross * np.sin(theta) * np.sin(phi2 - phi1)
    e = (ham.J * np.sum(g3[:, :-1] * g3[:, 1:], axis=1)
         + ham.h1 * np.sum(g1, axis=1)
         + ham.h2 * np.sum(g2, axis=1)
         + ham.h3 * np.sum(g3, axis=1))
    if ham.a:
        c = ham.charge_spread_coeffs()
        pair = [g4[:, :-1] * g4[:, 1:] + g5[:, :-1] * g5[:, 1:],
                g4[:, :-1] * g6[:, 1:] + g5[:, :-1] * g7[:, 1:],
                g6[:, :-1] * g4[:, 1:] + g7[:, :-1] * g5[:, 1:],
                g6[:, :-1] * g6[:, 1:] + g7[:, :-1] * g7[:, 1:]]
        e = e + ham.a * sum(np.sum(c[None, :, i] * pair[i], axis=1) for i in range(4))
    return e / ham.L if ham.normalize_by_L else e


def _tensor_state(site_amps: np.ndarray) -> np.ndarray:
    out = site_amps[0]
    for r in range(1, site_amps.shape[0]):
        out = (out[:, None] * site_amps[r][None, :]).ravel()
    return out


def random_product_state(spec: ProductStateSpec, ham: HamiltonianSpec | None = None,
                         rng: np.random.Generator | None = None) -> StateVector:
    """Draw one random unentangled state, optionally rejection-sampled until
    |<H> - target_E| <= target_tol.

    The product-state energy is evaluated in O(L) from single-site generator
    expectations, so rejection sampling stays cheap even at large L.
    """
    if spec.target_E is not None and ham is None:
        raise ValueError("target_E sampling needs the HamiltonianSpec")
    if ham is not None and ham.kind != spec.kind:
        raise ValueError("state and Hamiltonian kinds differ")
    rng = rng if rng is not None else np.random.default_rng(np.random.SeedSequence(spec.seed))
    L = spec.L
    f = spec.f_per_site()
    attempts = 0
    while True:
        batch = 1 if spec.target_E is None else _REJECTION_BATCH
        if spec.kind == "qubit":
            theta = rng.uniform(0.0, np.pi, size=(batch, L))
            phi = rng.uniform(0.0, 2.0 * np.pi, size=(batch, L))
            if spec.target_E is None:
                pick = 0
            else:
                e = _qubit_energies(theta, phi, ham)
                hits = np.nonzero(np.abs(e - spec.target_E) <= spec.target_tol)[0]
                attempts += batch
                if len(hits) == 0:
                    if attempts >= spec.max_attempts:
                        raise RejectionCapError(attempts, 0, spec.target_E)
                    continue
                pick = int(hits[0])
            amps = _qubit_site_amplitudes(theta[pick], phi[pick])
        else:
            theta = rng.uniform(0.0, np.pi / 2.0, size=(batch, L))
            phi1 = rng.uniform(0.0, 2.0 * np.pi, size=(batch, L))
            phi2 = rng.uniform(0.0, 2.0 * np.pi, size=(batch, L))
            if spec.target_E is None:
                pick = 0
            else:
                e = _qutrit_energies(theta, phi1, phi2, f[None, :], ham)
                hits = np.nonzero(np.abs(e - spec.target_E) <= spec.target_tol)[0]
                attempts += batch
                if len(hits) == 0:
                    if attempts >= spec.max_attempts:
                        raise RejectionCapError(attempts, 0, spec.target_E)
                    continue
                pick = int(hits[0])
            amps = _qutrit_site_amplitudes(theta[pick], phi1[pick], phi2[pick], f)
        vec = _tensor_state(amps)
        vec = vec / np.linalg.norm(vec)
        prov = {"recipe": f"random_product_{spec.kind}", "seed": spec.seed}
        if spec.target_E is not None:
            prov.update(target_E=spec.target_E, tol=spec.target_tol, attempts=attempts)
        return StateVector(vec, L, 2 if spec.kind == "qubit" else 3, prov)


def product_state_ensemble(spec: ProductStateSpec, ham: HamiltonianSpec | None,
                           count: int, master_seed: int) -> list[StateVector]:
    """Ensemble of independent product states with per-state derived streams."""
    states = []
    for i in range(count):
        s = random_product_state(spec, ham, rng=state_rng(master_seed, i))
        s.provenance.update(master_seed=master_seed, index=i)
        states.append(s)
    return states


def random_microcanonical_state(spec, window, seed=None,
                                rng: np.random.Generator | None = None) -> StateVector:
    """Random superposition of the eigenstates inside a microcanonical window.

    Amplitudes over the member eigenstates are independent complex Gaussians,
    normalized; everything outside the window has exactly zero amplitude.
    """
    members = window.member_indices
    if len(members) == 0:
        raise ValueError("empty microcanonical window")
    rng = rng if rng is not None else np.random.default_rng(np.random.SeedSequence(seed))
    g = rng.standard_normal(len(members)) + 1j * rng.standard_normal(len(members))
    g = g / np.linalg.norm(g)
    coeffs = np.zeros(spec.n_levels, dtype=complex)
    coeffs[members] = g
    psi = spec.synthesize(coeffs)
    psi = psi / np.linalg.norm(psi)
    return StateVector(psi, spec.L, spec.site_dim,
                       {"recipe": "random_microcanonical", "seed": seed,
                        "window": (window.e_min, window.e_max)})


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------

def _energy_coefficients(state: StateVector, spec) -> np.ndarray:
    if state.amplitudes.shape[0] != spec.full_dim:
        raise ValueError("state and spectrum live on different spaces")
    c = spec.project(state.amplitudes)
    if abs(np.vdot(c, c).real - 1.0) > 1e-9:
        raise ValueError("state has support outside the spanned spectrum")
    return c


def _evolved_chunks(c, spec, times, chunk):
    times = np.asarray(times, dtype=float)
    for start in range(0, len(times), chunk):
        t = times[start:start + chunk]
        phases = np.exp(-1j * np.outer(spec.energies, t))
        yield start, t, spec.synthesize(c[:, None] * phases)


def evolve_expectation(state: StateVector, spec, O: OperatorMatrix, times,
                       chunk: int = 256) -> TimeSeries:
    """<O>(t) on a time grid, via one transform into the energy basis."""
    c = _energy_coefficients(state, spec)
    times = np.asarray(times, dtype=float)
    values = np.empty(len(times))
    for start, t, psi in _evolved_chunks(c, spec, times, chunk):
        W = O.matrix @ psi
        values[start:start + len(t)] = np.real(np.einsum("it,it->t", psi.conj(), W))
    return TimeSeries(times, values, {"observable": O.name})


def evolve_entropy(state: StateVector, spec, site: int, times,
                   chunk: int = 256) -> TimeSeries:
    """Von Neumann entropy (bits) of one site along the trajectory."""
    c = _energy_coefficients(state, spec)
    d = spec.site_dim
    a = d ** (site - 1)
    b = d ** (spec.L - site)
    times = np.asarray(times, dtype=float)
    values = np.empty(len(times))
    for start, t, psi in _evolved_chunks(c, spec, times, chunk):
        T = np.ascontiguousarray(psi).reshape(a, d, b, len(t))
        rdms = np.einsum("xsyt,xuyt->tsu", T, T.conj(), optimize=True)
        values[start:start + len(t)] = rdm_entropies(rdms)
    return TimeSeries(times, values, {"observable": f"S(site {site})"})


def charge_profile(state: StateVector, spec, times, chunk: int = 256) -> TimeSeries:
    """Per-site charge expectations <q^(r)>(t); values have shape (T, L)."""
    if spec.site_dim != 3:
        raise ValueError("charge profiles are defined for qutrit chains")
    c = _energy_coefficients(state, spec)
    masks = (basis_digits(spec.L, 3) == 2).astype(float)   # (dim, L)
    times = np.asarray(times, dtype=float)
    values = np.empty((len(times), spec.L))
    for start, t, psi in _evolved_chunks(c, spec, times, chunk):
        prob = np.abs(psi) ** 2
        values[start:start + len(t)] = (masks.T @ prob).T
    return TimeSeries(times, values, {"observable": "site charges"})


# ---------------------------------------------------------------------------
# infinite-time statistics
# ---------------------------------------------------------------------------

class TimeAverage(NamedTuple):
    value: float
    degenerate: bool


def has_degeneracies(spec, rel_tol: float = 1e-12) -> bool:
    E = spec.energies
    span = E[-1] - E[0]
    return bool(np.any(np.diff(E) < rel_tol * max(span, 1.0)))


def time_average(state: StateVector, spec, O: OperatorMatrix) -> TimeAverage:
    """Infinite-time average sum_i |c_i|^2 O_ii (the diagonal-ensemble value).

    Assumes a nondegenerate spectrum; degeneracies are detected and flagged
    but the formula is still returned.
    """
    c = _energy_coefficients(state, spec)
    w = np.abs(c) ** 2
    diag = spec.op_diagonal(O)
    return TimeAverage(float(np.dot(w, diag)), has_degeneracies(spec))


def fluctuation_bound(state: StateVector, spec, O: OperatorMatrix):
    """Infinite-time variance of <O>(t) and its max-off-diagonal bound.

    variance = sum_{i != j} |c_i|^2 |c_j|^2 |O_ij|^2  <=  max_{i != j} |O_ij|^2.
    """
    c = _energy_coefficients(state, spec)
    w = np.abs(c) ** 2
    A = spec.op_matrix(O)
    A2 = np.abs(A) ** 2
    np.fill_diagonal(A2, 0.0)
    variance = float(w @ A2 @ w)
    bound = float(A2.max())
    assert variance <= bound + 1e-15
    return variance, bound


def central_moments(state: StateVector, spec, n_max: int) -> np.ndarray:
    """Central moments of the state's energy distribution, orders 2..n_max."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    c = _energy_coefficients(state, spec)
    w = np.abs(c) ** 2
    e_mean = np.dot(w, spec.energies)
    delta = spec.energies - e_mean
    return np.array([np.dot(w, delta ** n) for n in range(2, n_max + 1)])
