import numpy as np
import pytest
from scipy.linalg import expm

from ethlab import dynamics as dyn
from ethlab import ensembles as ens
from ethlab import operators as ops, spectral
from ethlab.entanglement import reduce, von_neumann_entropy

from helpers import index_of


@pytest.fixture(scope="module")
def qubit6():
    return spectral.diagonalize_system(ops.HamiltonianSpec(kind="qubit", L=6))


@pytest.fixture(scope="module")
def qutrit4():
    return spectral.diagonalize_system(
        ops.HamiltonianSpec(kind="qutrit", L=4, a=1.0, seed=5))


class TestProductStates:
    def test_f_zero_has_no_charge_support(self):
        spec = dyn.ProductStateSpec(kind="qutrit", L=4, f=0.0, seed=1)
        s = dyn.random_product_state(spec)
        charged = ops.charge_of_basis(4) > 0
        assert np.all(s.amplitudes[charged] == 0.0)

    def test_f_one_is_fully_charged_eigenstate(self):
        spec = dyn.ProductStateSpec(kind="qutrit", L=3, f=1.0, seed=2)
        s = dyn.random_product_state(spec)
        assert abs(s.amplitudes[-1]) == pytest.approx(1.0, abs=1e-12)
        H = ops.build_qutrit_hamiltonian(
            ops.HamiltonianSpec(kind="qutrit", L=3, seed=0))
        assert H.expectation(s.amplitudes) == pytest.approx(0.0, abs=1e-12)

    def test_local_charge_expectation_is_f(self):
        f = 0.37
        spec = dyn.ProductStateSpec(kind="qutrit", L=4, f=f, seed=3)
        s = dyn.random_product_state(spec)
        locals_, _ = ops.build_charge_operators(4)
        for q in locals_:
            assert q.expectation(s.amplitudes) == pytest.approx(f, abs=1e-12)

    def test_charge_sector_weights_are_binomial(self):
        from math import comb
        L, f = 5, 0.3
        spec = dyn.ProductStateSpec(kind="qutrit", L=L, f=f, seed=4)
        s = dyn.random_product_state(spec)
        charges = ops.charge_of_basis(L)
        prob = np.abs(s.amplitudes) ** 2
        for q in range(L + 1):
            want = comb(L, q) * f ** q * (1 - f) ** (L - q)
            assert prob[charges == q].sum() == pytest.approx(want, abs=1e-10)

    def test_initial_entropy_zero_everywhere(self):
        spec = dyn.ProductStateSpec(kind="qubit", L=5, seed=5)
        s = dyn.random_product_state(spec)
        for site in range(1, 6):
            rho = reduce(s.amplitudes, [site], 5, 2)
            assert von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-10)

    def test_rejection_hits_target(self):
        ham = ops.HamiltonianSpec(kind="qubit", L=6)
        spec = dyn.ProductStateSpec(kind="qubit", L=6, target_E=-0.4, seed=6)
        s = dyn.random_product_state(spec, ham)
        H = ops.build_qubit_hamiltonian(ham)
        assert abs(H.expectation(s.amplitudes) + 0.4) <= spec.target_tol + 1e-12

    def test_qutrit_rejection_matches_sparse_oracle(self):
        ham = ops.HamiltonianSpec(kind="qutrit", L=4, a=1.0, seed=7)
        spec = dyn.ProductStateSpec(kind="qutrit", L=4, f=0.25,
                                    target_E=-0.1, seed=8)
        s = dyn.random_product_state(spec, ham)
        H = ops.build_qutrit_hamiltonian(ham)
        assert abs(H.expectation(s.amplitudes) + 0.1) <= spec.target_tol + 1e-12

    def test_rejection_cap(self):
        ham = ops.HamiltonianSpec(kind="qubit", L=4)
        spec = dyn.ProductStateSpec(kind="qubit", L=4, target_E=50.0,
                                    max_attempts=20_000, seed=9)
        with pytest.raises(dyn.RejectionCapError) as err:
            dyn.random_product_state(spec, ham)
        assert err.value.acceptance_rate == 0.0

    def test_target_needs_hamiltonian(self):
        spec = dyn.ProductStateSpec(kind="qubit", L=4, target_E=0.0)
        with pytest.raises(ValueError):
            dyn.random_product_state(spec)

    def test_ensemble_reproducible(self):
        ham = ops.HamiltonianSpec(kind="qubit", L=4)
        spec = dyn.ProductStateSpec(kind="qubit", L=4)
        a = dyn.product_state_ensemble(spec, ham, 3, master_seed=11)
        b = dyn.product_state_ensemble(spec, ham, 3, master_seed=11)
        for x, y in zip(a, b):
            assert np.array_equal(x.amplitudes, y.amplitudes)

    def test_f_validation(self):
        with pytest.raises(ValueError):
            dyn.ProductStateSpec(kind="qutrit", L=3, f=1.5)
        with pytest.raises(ValueError):
            dyn.ProductStateSpec(kind="qutrit", L=3, f=(0.1, 0.2))


class TestMicrocanonicalStates:
    def test_single_member_returns_eigenstate(self, qubit6):
        k = 20
        e = qubit6.energies[k]
        window = ens.microcanonical_window(qubit6, e - 1e-12, e + 1e-12)
        s = dyn.random_microcanonical_state(qubit6, window, seed=0)
        v = qubit6.eigenstates_full([k])[:, 0]
        assert abs(np.vdot(v, s.amplitudes)) == pytest.approx(1.0, abs=1e-12)

    def test_energy_inside_window(self, qubit6):
        window = ens.window_around(qubit6, -0.2, 0.1)
        s = dyn.random_microcanonical_state(qubit6, window, seed=1)
        H = ops.build_qubit_hamiltonian(ops.HamiltonianSpec(kind="qubit", L=6))
        e = H.expectation(s.amplitudes)
        assert window.e_min - 1e-12 <= e <= window.e_max + 1e-12

    def test_no_support_outside_window(self, qubit6):
        window = ens.window_around(qubit6, 0.1, 0.05)
        s = dyn.random_microcanonical_state(qubit6, window, seed=2)
        c = qubit6.project(s.amplitudes)
        outside = np.ones(qubit6.n_levels, dtype=bool)
        outside[window.member_indices] = False
        assert np.max(np.abs(c[outside])) < 1e-12

    def test_sector_state_observable_within_eigenstate_range(self):
        # chaotic qutrit sector: single-site observable of a window state
        # stays within the range spanned by the member eigenstates' values
        ham = ops.HamiltonianSpec(kind="qutrit", L=6, a=1.0, seed=3)
        part = next(p for p in spectral.diagonalize_system(ham).parts
                    if p.charge == 2)
        O = ops.embed_at_site(ops.LAMBDA[1], 3, 6)
        window = ens.window_around(part, 0.0, 0.05)
        assert len(window.member_indices) >= 10
        diag = part.op_diagonal(O)[window.member_indices]
        span = diag.max() - diag.min()
        for seed in range(5):
            s = dyn.random_microcanonical_state(part, window, seed=seed)
            val = O.expectation(s.amplitudes)
            assert diag.min() - 0.1 * span <= val <= diag.max() + 0.1 * span


class TestEvolution:
    def test_energy_is_conserved(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=12)
        s = dyn.random_product_state(spec)
        H = ops.build_qubit_hamiltonian(ops.HamiltonianSpec(kind="qubit", L=6))
        ts = dyn.evolve_expectation(s, qubit6, H, np.linspace(0, 20, 41))
        assert np.max(np.abs(ts.values - ts.values[0])) < 1e-9

    def test_eigenstate_is_stationary(self, qubit6):
        psi = qubit6.eigenstates_full([5])[:, 0].astype(complex)
        s = dyn.StateVector(psi, 6, 2)
        O = ops.embed_at_site(ops.SIGMA_X, 2, 6)
        ts = dyn.evolve_expectation(s, qubit6, O, np.linspace(0, 10, 21))
        assert np.max(np.abs(ts.values - ts.values[0])) < 1e-10

    def test_matches_matrix_exponential_oracle(self):
        ham = ops.HamiltonianSpec(kind="qubit", L=4)
        sd = spectral.diagonalize_system(ham)
        H = ops.build_qubit_hamiltonian(ham).dense()
        spec = dyn.ProductStateSpec(kind="qubit", L=4, seed=13)
        s = dyn.random_product_state(spec)
        O = ops.embed_at_site(ops.SIGMA_Z, 3, 4)
        times = [0.0, 0.7, 3.1, 8.9]
        ts = dyn.evolve_expectation(s, sd, O, times)
        for k, t in enumerate(times):
            U = expm(-1j * H * t)
            psi_t = U @ s.amplitudes
            want = np.real(np.vdot(psi_t, O.matrix @ psi_t))
            assert ts.values[k] == pytest.approx(want, abs=1e-9)

    def test_norm_preserved_along_trajectory(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=14)
        s = dyn.random_product_state(spec)
        c = qubit6.project(s.amplitudes)
        for t in (0.0, 5.0, 50.0, 500.0):
            psi_t = qubit6.synthesize(c * np.exp(-1j * qubit6.energies * t))
            assert abs(np.linalg.norm(psi_t) - 1.0) < 1e-10

    def test_entropy_grows_from_zero(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=15)
        s = dyn.random_product_state(spec)
        ts = dyn.evolve_entropy(s, qubit6, 1, np.linspace(0, 30, 31))
        assert ts.values[0] == pytest.approx(0.0, abs=1e-10)
        assert ts.values[5:].mean() > 0.5

    def test_space_mismatch_rejected(self, qubit6):
        s = dyn.StateVector(np.eye(16, dtype=complex)[:, 0], 4, 2)
        O = ops.embed_at_site(ops.SIGMA_X, 1, 4)
        with pytest.raises(ValueError):
            dyn.evolve_expectation(s, qubit6, O, [0.0, 1.0])

    def test_times_must_increase(self):
        with pytest.raises(ValueError):
            dyn.TimeSeries(np.array([0.0, 1.0, 1.0]), np.zeros(3))


class TestChargeDynamics:
    def test_total_charge_conserved_locals_vary(self, qutrit4):
        spec = dyn.ProductStateSpec(kind="qutrit", L=4, f=0.4, seed=16)
        s = dyn.random_product_state(spec)
        ts = dyn.charge_profile(s, qutrit4, np.linspace(0, 40, 81))
        totals = ts.values.sum(axis=1)
        assert np.max(np.abs(totals - totals[0])) < 1e-9
        assert np.max(np.abs(ts.values - ts.values[0])) > 0.01

    def test_spreading_off_freezes_local_charges(self):
        ham = ops.HamiltonianSpec(kind="qutrit", L=4, a=0.0)
        ss = spectral.diagonalize_system(ham)
        spec = dyn.ProductStateSpec(kind="qutrit", L=4, f=0.4, seed=17)
        s = dyn.random_product_state(spec)
        ts = dyn.charge_profile(s, ss, np.linspace(0, 20, 41))
        assert np.max(np.abs(ts.values - ts.values[0])) < 1e-9

    def test_requires_qutrit(self, qubit6):
        s = dyn.random_product_state(dyn.ProductStateSpec(kind="qubit", L=6, seed=1))
        with pytest.raises(ValueError):
            dyn.charge_profile(s, qubit6, [0.0, 1.0])


class TestInfiniteTimeStatistics:
    def test_time_average_equals_diagonal_ensemble(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=18)
        s = dyn.random_product_state(spec)
        O = ops.embed_at_site(ops.SIGMA_X, 1, 6)
        ta = dyn.time_average(s, qubit6, O)
        w = ens.diagonal_ensemble(s, qubit6)
        want = float(np.dot(w, qubit6.op_diagonal(O)))
        assert ta.value == pytest.approx(want, abs=1e-10)
        assert not ta.degenerate

    def test_eigenstate_time_average_is_diagonal_element(self, qubit6):
        psi = qubit6.eigenstates_full([9])[:, 0].astype(complex)
        s = dyn.StateVector(psi, 6, 2)
        O = ops.embed_at_site(ops.SIGMA_Z, 4, 6)
        ta = dyn.time_average(s, qubit6, O)
        assert ta.value == pytest.approx(qubit6.op_diagonal(O)[9], abs=1e-10)

    def test_identity_averages_to_one(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=19)
        s = dyn.random_product_state(spec)
        ta = dyn.time_average(s, qubit6, ops.identity_matrix(6, 2))
        assert ta.value == pytest.approx(1.0, abs=1e-10)

    def test_long_window_quadrature_oracle(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=20)
        s = dyn.random_product_state(spec)
        O = ops.embed_at_site(ops.SIGMA_X, 1, 6)
        ta = dyn.time_average(s, qubit6, O)
        times = np.arange(0.0, 2000.0, 0.25)
        ts = dyn.evolve_expectation(s, qubit6, O, times)
        assert ts.values.mean() == pytest.approx(ta.value, rel=1e-3, abs=1e-3)

    def test_degenerate_flag(self):
        ham = ops.HamiltonianSpec(kind="qubit", L=4, h_x=0.0)
        sd = spectral.diagonalize_system(ham)
        spec = dyn.ProductStateSpec(kind="qubit", L=4, seed=21)
        s = dyn.random_product_state(spec)
        ta = dyn.time_average(s, sd, ops.embed_at_site(ops.SIGMA_Z, 1, 4))
        assert ta.degenerate


class TestFluctuationBound:
    def test_diagonal_operator_has_zero_variance(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=22)
        s = dyn.random_product_state(spec)
        H = ops.build_qubit_hamiltonian(ops.HamiltonianSpec(kind="qubit", L=6))
        var, bound = dyn.fluctuation_bound(s, qubit6, H)
        assert var < 1e-18

    def test_variance_below_bound(self, qubit6):
        for seed in range(3):
            spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=30 + seed)
            s = dyn.random_product_state(spec)
            O = ops.embed_at_site(ops.SIGMA_X, 1, 6)
            var, bound = dyn.fluctuation_bound(s, qubit6, O)
            assert var <= bound

    def test_empirical_variance_oracle(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=23)
        s = dyn.random_product_state(spec)
        O = ops.embed_at_site(ops.SIGMA_X, 1, 6)
        var, _ = dyn.fluctuation_bound(s, qubit6, O)
        times = np.arange(0.0, 5000.0, 0.5)
        ts = dyn.evolve_expectation(s, qubit6, O, times)
        empirical = float(np.var(ts.values))
        assert empirical == pytest.approx(var, rel=0.05)


class TestCentralMoments:
    def test_eigenstate_moments_vanish(self, qubit6):
        psi = qubit6.eigenstates_full([11])[:, 0].astype(complex)
        s = dyn.StateVector(psi, 6, 2)
        moments = dyn.central_moments(s, qubit6, 5)
        assert np.max(np.abs(moments)) < 1e-12

    def test_two_level_superposition(self, qubit6):
        i, j = 10, 40
        U = qubit6.eigenstates_full([i, j])
        psi = (U[:, 0] + U[:, 1]).astype(complex) / np.sqrt(2)
        s = dyn.StateVector(psi, 6, 2)
        delta = 0.5 * (qubit6.energies[j] - qubit6.energies[i])
        moments = dyn.central_moments(s, qubit6, 3)
        assert moments[0] == pytest.approx(delta ** 2, rel=1e-10)
        assert moments[1] == pytest.approx(0.0, abs=1e-12)

    def test_product_states_have_gibbs_scale_moments(self):
        # fixed-energy unentangled states have energy spread comparable to the
        # Gibbs state at the same energy, far above a +-0.05 window
        ham = ops.HamiltonianSpec(kind="qubit", L=8)
        sd = spectral.diagonalize_system(ham)
        target = -0.4
        beta = ens.solve_beta(sd, target)
        w = ens.gibbs_weights(sd, ens.GibbsParams(beta))
        gibbs_var = float(np.dot(w, (sd.energies - target) ** 2))
        spec = dyn.ProductStateSpec(kind="qubit", L=8, target_E=target, seed=24)
        for k in range(3):
            s = dyn.random_product_state(spec, ham,
                                         rng=np.random.default_rng(100 + k))
            m2 = dyn.central_moments(s, sd, 2)[0]
            assert 0.2 * gibbs_var < m2 < 5.0 * gibbs_var
            assert m2 > 4.0 * 0.05 ** 2

    def test_order_validation(self, qubit6):
        spec = dyn.ProductStateSpec(kind="qubit", L=6, seed=25)
        s = dyn.random_product_state(spec)
        with pytest.raises(ValueError):
            dyn.central_moments(s, qubit6, 1)
