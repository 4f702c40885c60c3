"""Thermal reference ensembles: microcanonical, (generalized) Gibbs, diagonal.

The generalized ensemble is parametrized by (beta, gamma) with gamma = beta*mu
so that the beta = 0 point stays regular.  All exponential weights are
computed with a max-log-weight shift.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entanglement import mixed_reduce, von_neumann_entropy
from .operators import OperatorMatrix

BETA_CAP_SCALE = 1e4
SOLVE_BETA_TOL = 1e-10
SOLVE_BETA_GAMMA_TOL = 1e-8


class EmptyWindowError(ValueError):
    pass


class TargetUnattainableError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass
class MicrocanonicalWindow:
    e_min: float
    e_max: float
    member_indices: np.ndarray
    mean_energy: float


def microcanonical_window(spec, e_min: float, e_max: float) -> MicrocanonicalWindow:
    """All eigenstates with energy inside [e_min, e_max].

    The window's energy label is the average of the member energies, not the
    center of the interval.
    """
    members = np.nonzero((spec.energies >= e_min) & (spec.energies <= e_max))[0]
    if len(members) == 0:
        raise EmptyWindowError(f"no eigenstates in [{e_min}, {e_max}]")
    return MicrocanonicalWindow(e_min, e_max, members,
                                float(spec.energies[members].mean()))


def window_around(spec, e_center: float, half_width: float = 0.05) -> MicrocanonicalWindow:
    return microcanonical_window(spec, e_center - half_width, e_center + half_width)


def microcanonical_expectation(spec, window: MicrocanonicalWindow,
                               O: OperatorMatrix) -> float:
    """Uniform average of <E_i|O|E_i> over the window members."""
    if len(window.member_indices) == 0:
        raise EmptyWindowError("empty microcanonical window")
    U = spec.eigenstates_full(window.member_indices)
    W = O.matrix @ U
    diag = np.real(np.einsum("ki,ki->i", U.conj(), W))
    return float(diag.mean())


@dataclass
class GibbsParams:
    beta: float
    gamma: float | None = None

    @property
    def mu(self) -> float | None:
        """Chemical potential gamma/beta; only defined away from beta = 0."""
        if self.gamma is None or self.beta == 0.0:
            return None
        return self.gamma / self.beta


def gibbs_weights(spec, params: GibbsParams, charges=None) -> np.ndarray:
    """Normalized weights w_i proportional to exp(-beta E_i + gamma q_i)."""
    logw = -params.beta * spec.energies
    if params.gamma is not None:
        q = spec.charges if charges is None else np.asarray(charges, dtype=float)
        if q is None:
            raise ValueError("gamma weighting requires per-eigenstate charges")
        logw = logw + params.gamma * q
    logw = logw - logw.max()
    w = np.exp(logw)
    return w / w.sum()


def ensemble_expectation(weights: np.ndarray, values: np.ndarray) -> float:
    return float(np.dot(weights, values))


def solve_beta(spec, target_E: float, tol: float = SOLVE_BETA_TOL,
               max_iter: int = 500) -> float:
    """Inverse temperature with tr(rho_beta H) = target_E, by bisection.

    <H>_beta is strictly decreasing in beta, so a sign-definite bracket
    [-beta_cap, +beta_cap] with beta_cap = 1e4 / spectral range always
    contains the root; negative-temperature targets (above the spectral
    mean) are supported.
    """
    E = spec.energies
    span = float(E[-1] - E[0])
    if span <= 0:
        raise TargetUnattainableError("spectrum has zero range")
    if not (E[0] < target_E < E[-1]):
        raise TargetUnattainableError(
            f"target energy {target_E} outside open interval ({E[0]}, {E[-1]})")
    cap = BETA_CAP_SCALE / span

    def mean_energy(beta):
        return ensemble_expectation(gibbs_weights(spec, GibbsParams(beta)), E)

    lo, hi = -cap, cap
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f = mean_energy(mid) - target_E
        if abs(f) < tol:
            return mid
        if f > 0:      # <H> too high: raise beta
            lo = mid
        else:
            hi = mid
        if hi - lo < np.finfo(float).eps * max(1.0, abs(lo), abs(hi)):
            break
    f = mean_energy(0.5 * (lo + hi)) - target_E
    if abs(f) < tol:
        return 0.5 * (lo + hi)
    raise ConvergenceError(
        f"bisection stalled at residual {f:.3e} for target {target_E}")


def _weighted_cov(w, x, y):
    mx = np.dot(w, x)
    my = np.dot(w, y)
    return np.dot(w, (x - mx) * (y - my))


def solve_beta_gamma(spec, charges, target_E: float, target_Q: float,
                     tol: float = SOLVE_BETA_GAMMA_TOL,
                     max_iter: int = 200) -> GibbsParams:
    """Solve (<H>, <Q>) = (target_E, target_Q) for (beta, gamma).

    Newton iteration with the exact Jacobian built from the (H, Q) covariance
    matrix under the current weights, with damped (halved) steps whenever a
    full step fails to reduce the residual.
    """
    E = spec.energies
    q = np.asarray(charges, dtype=float)
    if len(q) != len(E):
        raise ValueError("charges must align with the spectrum")
    if not (E[0] <= target_E <= E[-1]) or not (q.min() <= target_Q <= q.max()):
        raise TargetUnattainableError(
            f"target ({target_E}, {target_Q}) outside the attainable box")

    x = np.array([0.0, 0.0])

    def residual(xvec):
        w = gibbs_weights(spec, GibbsParams(xvec[0], xvec[1]), charges=q)
        r = np.array([np.dot(w, E) - target_E, np.dot(w, q) - target_Q])
        return w, r

    w, r = residual(x)
    for _ in range(max_iter):
        rnorm = np.linalg.norm(r)
        if rnorm < tol:
            return GibbsParams(float(x[0]), float(x[1]))
        var_h = _weighted_cov(w, E, E)
        var_q = _weighted_cov(w, q, q)
        cov_hq = _weighted_cov(w, E, q)
        J = np.array([[-var_h, cov_hq], [-cov_hq, var_q]])
        det = np.linalg.det(J)
        if not np.isfinite(det) or abs(det) < 1e-300:
            raise ConvergenceError(
                f"singular Jacobian (covariance determinant {det:.3e}) at "
                f"beta={x[0]:.6g}, gamma={x[1]:.6g}")
        step = np.linalg.solve(J, -r)
        t = 1.0
        for _ in range(60):
            w_new, r_new = residual(x + t * step)
            if np.linalg.norm(r_new) < rnorm:
                break
            t *= 0.5
        else:
            raise ConvergenceError(
                f"damped Newton failed to reduce residual {rnorm:.3e}")
        x = x + t * step
        w, r = w_new, r_new
    if np.linalg.norm(r) < tol:
        return GibbsParams(float(x[0]), float(x[1]))
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations; residual {np.linalg.norm(r):.3e}")


def diagonal_ensemble(state, spec) -> np.ndarray:
    """Dephased weights |<E_i|psi>|^2 of a normalized state."""
    amplitudes = getattr(state, "amplitudes", state)
    if abs(np.linalg.norm(amplitudes) - 1.0) > 1e-10:
        raise ValueError("state is not normalized")
    c = spec.project(amplitudes)
    w = np.abs(c) ** 2
    if abs(w.sum() - 1.0) > 1e-10:
        raise ValueError("state has weight outside the spanned spectrum "
                         f"(sum |c_i|^2 = {w.sum():.12f})")
    return w


def thermal_entropy_of_site(weights, spec, site: int) -> float:
    """Entropy in bits of one site of the mixed state sum_i w_i |E_i><E_i|."""
    if not 1 <= site <= spec.L:
        raise ValueError(f"site {site} out of range 1..{spec.L}")
    rdm = mixed_reduce(weights, spec, (site,))
    return von_neumann_entropy(rdm)
