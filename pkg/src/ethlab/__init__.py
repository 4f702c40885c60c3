"""ethlab: exact-diagonalization diagnostics of chaos, ETH, and thermalization
in qubit and qutrit spin chains."""

__version__ = "0.1.0"

from .operators import (HamiltonianSpec, LocalOperator, OperatorMatrix,
                        build_charge_operators, build_charge_spread,
                        build_hamiltonian, build_qubit_hamiltonian,
                        build_qutrit_hamiltonian, embed_at_site, local_operator)
from .sectors import SectorBlock, SectorLabel, build_parity, decompose
from .spectral import (SectorSpectra, SpectralData, assemble, classify_spacing,
                       diagonalize, diagonalize_full, diagonalize_sectors,
                       diagonalize_system, poisson, spacing_distribution,
                       surmise, unfold)
from .ensembles import (GibbsParams, MicrocanonicalWindow, diagonal_ensemble,
                        gibbs_weights, microcanonical_expectation,
                        microcanonical_window, solve_beta, solve_beta_gamma,
                        thermal_entropy_of_site, window_around)
from .dynamics import (ProductStateSpec, StateVector, TimeSeries,
                       central_moments, charge_profile, evolve_entropy,
                       evolve_expectation, fluctuation_bound,
                       random_microcanonical_state, random_product_state,
                       time_average)
from .entanglement import (ReducedDensityMatrix, mixed_reduce, reduce,
                           von_neumann_entropy)
from .eth import (EthMatrixData, counter_diagonal_average, diag_offdiag_ratio,
                  eigenstate_scatter, energy_basis_elements, scaling_fit)
from .selectors import operator_selector
from .config import ExperimentConfig, load_config, parse_config
