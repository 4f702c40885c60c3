import numpy as np
import pytest

from ethlab import ensembles as ens
from ethlab import operators as ops, spectral


@pytest.fixture(scope="module")
def qubit6():
    ham = ops.HamiltonianSpec(kind="qubit", L=6)
    return spectral.diagonalize_system(ham)


@pytest.fixture(scope="module")
def qutrit4():
    ham = ops.HamiltonianSpec(kind="qutrit", L=4, a=1.0, seed=5)
    return spectral.diagonalize_system(ham)


class TestMicrocanonical:
    def test_single_member_window(self, qubit6):
        k = 10
        e = qubit6.energies[k]
        w = ens.microcanonical_window(qubit6, e - 1e-12, e + 1e-12)
        assert list(w.member_indices) == [k]
        O = ops.embed_at_site(ops.SIGMA_X, 1, 6)
        got = ens.microcanonical_expectation(qubit6, w, O)
        v = qubit6.eigenstates_full([k])[:, 0]
        assert got == pytest.approx(np.real(np.vdot(v, O.matrix @ v)), abs=1e-12)

    def test_identity_expectation(self, qubit6):
        w = ens.window_around(qubit6, 0.0, 0.2)
        got = ens.microcanonical_expectation(qubit6, w, ops.identity_matrix(6, 2))
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_mean_energy_inside_window(self, qubit6):
        w = ens.window_around(qubit6, -0.3, 0.1)
        assert w.e_min <= w.mean_energy <= w.e_max

    def test_empty_window(self, qubit6):
        top = qubit6.energies[-1]
        with pytest.raises(ens.EmptyWindowError):
            ens.microcanonical_window(qubit6, top + 1.0, top + 2.0)


class TestGibbs:
    def test_beta_zero_is_uniform(self, qubit6):
        w = ens.gibbs_weights(qubit6, ens.GibbsParams(0.0))
        assert np.allclose(w, 1.0 / qubit6.n_levels, atol=1e-15)

    def test_large_beta_concentrates_on_ground_state(self, qubit6):
        span = qubit6.energies[-1] - qubit6.energies[0]
        beta = 1e4 / span
        w = ens.gibbs_weights(qubit6, ens.GibbsParams(beta))
        e_mean = float(np.dot(w, qubit6.energies))
        assert abs(e_mean - qubit6.energies[0]) < 1e-6

    def test_uniform_qutrit_charge_is_L_over_3(self, qutrit4):
        w = ens.gibbs_weights(qutrit4, ens.GibbsParams(0.0, 0.0))
        q_mean = float(np.dot(w, qutrit4.charges))
        assert q_mean == pytest.approx(4.0 / 3.0, abs=1e-12)

    def test_gamma_requires_charges(self, qubit6):
        with pytest.raises(ValueError):
            ens.gibbs_weights(qubit6, ens.GibbsParams(1.0, 0.5))

    def test_sector_restriction_consistent(self, qutrit4):
        # gamma=0 weights restricted to one charge sector match the
        # sector-level Gibbs weights at the same beta
        beta = 0.7
        w = ens.gibbs_weights(qutrit4, ens.GibbsParams(beta, 0.0))
        mask = qutrit4.charges == 1
        restricted = w[mask] / w[mask].sum()
        part = next(p for p in qutrit4.parts if p.charge == 1)
        w_part = ens.gibbs_weights(part, ens.GibbsParams(beta))
        order = np.argsort(part.energies, kind="stable")
        assert np.allclose(np.sort(restricted), np.sort(w_part), atol=1e-12)


class TestSolveBeta:
    def test_traceless_target_zero_gives_beta_zero(self, qubit6):
        assert ens.solve_beta(qubit6, 0.0) == 0.0

    def test_roundtrip_identity(self, qubit6):
        for beta in (-2.0, -0.5, 0.3, 1.7, 4.0):
            w = ens.gibbs_weights(qubit6, ens.GibbsParams(beta))
            target = float(np.dot(w, qubit6.energies))
            solved = ens.solve_beta(qubit6, target)
            w2 = ens.gibbs_weights(qubit6, ens.GibbsParams(solved))
            assert float(np.dot(w2, qubit6.energies)) == pytest.approx(target, abs=1e-8)

    def test_monotone_decrease(self, qubit6):
        betas = np.linspace(-3, 3, 13)
        means = [float(np.dot(ens.gibbs_weights(qubit6, ens.GibbsParams(b)),
                              qubit6.energies)) for b in betas]
        assert np.all(np.diff(means) < 0)

    def test_target_near_ground_state(self, qubit6):
        target = qubit6.energies[0] + 1e-4
        beta = ens.solve_beta(qubit6, target)
        assert beta > 10.0

    def test_negative_temperature_branch(self, qubit6):
        target = 0.5 * qubit6.energies[-1]
        beta = ens.solve_beta(qubit6, target)
        assert beta < 0.0

    def test_target_outside_spectrum(self, qubit6):
        with pytest.raises(ens.TargetUnattainableError):
            ens.solve_beta(qubit6, qubit6.energies[-1] + 0.1)


class TestSolveBetaGamma:
    def test_uniform_fixed_point(self, qutrit4):
        params = ens.solve_beta_gamma(qutrit4, qutrit4.charges, 0.0, 4.0 / 3.0)
        assert params.beta == 0.0
        assert params.gamma == 0.0

    def test_roundtrip_random_targets(self, qutrit4):
        rng = np.random.default_rng(23)
        for _ in range(10):
            beta, gamma = rng.uniform(-2, 2, size=2)
            w = ens.gibbs_weights(qutrit4, ens.GibbsParams(beta, gamma))
            te = float(np.dot(w, qutrit4.energies))
            tq = float(np.dot(w, qutrit4.charges))
            params = ens.solve_beta_gamma(qutrit4, qutrit4.charges, te, tq)
            w2 = ens.gibbs_weights(qutrit4, params)
            res = np.hypot(np.dot(w2, qutrit4.energies) - te,
                           np.dot(w2, qutrit4.charges) - tq)
            assert res < 1e-8

    def test_high_charge_target_forces_positive_gamma(self, qutrit4):
        params = ens.solve_beta_gamma(qutrit4, qutrit4.charges, 0.0, 3.75)
        assert params.gamma > 1.0
        w = ens.gibbs_weights(qutrit4, params)
        high = w[qutrit4.charges >= 3].sum()
        assert high > 0.9

    def test_unattainable_target(self, qutrit4):
        with pytest.raises(ens.TargetUnattainableError):
            ens.solve_beta_gamma(qutrit4, qutrit4.charges, 0.0, 5.0)

    def test_mu_reporting(self):
        assert ens.GibbsParams(2.0, 1.0).mu == pytest.approx(0.5)
        assert ens.GibbsParams(0.0, 1.0).mu is None
        assert ens.GibbsParams(1.0).mu is None


class TestDiagonalEnsemble:
    def test_eigenstate_indicator(self, qubit6):
        psi = qubit6.eigenstates_full([7])[:, 0].astype(complex)
        w = ens.diagonal_ensemble(psi, qubit6)
        assert w[7] == pytest.approx(1.0, abs=1e-12)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)

    def test_random_state_sums_to_one(self, qubit6):
        rng = np.random.default_rng(2)
        psi = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        psi /= np.linalg.norm(psi)
        w = ens.diagonal_ensemble(psi, qubit6)
        assert w.sum() == pytest.approx(1.0, abs=1e-10)

    def test_unnormalized_rejected(self, qubit6):
        with pytest.raises(ValueError):
            ens.diagonal_ensemble(np.ones(64), qubit6)


class TestThermalSiteEntropy:
    def test_infinite_temperature_qubit(self, qubit6):
        w = np.full(qubit6.n_levels, 1.0 / qubit6.n_levels)
        assert ens.thermal_entropy_of_site(w, qubit6, 1) == pytest.approx(1.0, abs=1e-10)

    def test_infinite_temperature_qutrit(self, qutrit4):
        w = np.full(qutrit4.n_levels, 1.0 / qutrit4.n_levels)
        got = ens.thermal_entropy_of_site(w, qutrit4, 2)
        assert got == pytest.approx(np.log2(3), abs=1e-10)

    def test_zero_temperature_matches_ground_state(self, qubit6):
        span = qubit6.energies[-1] - qubit6.energies[0]
        w = ens.gibbs_weights(qubit6, ens.GibbsParams(1e4 / span))
        from ethlab.entanglement import reduce, von_neumann_entropy
        psi = qubit6.eigenstates_full([0])[:, 0]
        want = von_neumann_entropy(reduce(psi, [1], 6, 2))
        got = ens.thermal_entropy_of_site(w, qubit6, 1)
        assert got == pytest.approx(want, abs=1e-5)

    def test_site_validation(self, qubit6):
        with pytest.raises(ValueError):
            ens.thermal_entropy_of_site(np.full(64, 1 / 64), qubit6, 7)


class TestNarrowSupportEquivalence:
    def test_single_window_vs_zero_temperature(self, qubit6):
        # one-eigenstate microcanonical window == beta -> inf Gibbs state
        O = ops.embed_at_site(ops.SIGMA_X, 1, 6)
        e0 = qubit6.energies[0]
        window = ens.microcanonical_window(qubit6, e0 - 1e-9, e0 + 1e-9)
        micro = ens.microcanonical_expectation(qubit6, window, O)
        span = qubit6.energies[-1] - qubit6.energies[0]
        w = ens.gibbs_weights(qubit6, ens.GibbsParams(1e4 / span))
        gibbs = float(np.dot(w, qubit6.op_diagonal(O)))
        assert micro == pytest.approx(gibbs, abs=1e-6)
