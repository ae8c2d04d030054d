"""Exact finite-dimensional checks for many-particle evolution hierarchies
and the kinetic equations derived from them."""

from .dynamics import (ClusterArgument, Propagators, SystemSpec, cumulant,
                       group_action, hamiltonian, scattering_group)
from .errors import (ConvergenceError, QuadratureError, ScenarioError,
                     TruncationError, ValidationError)
from .hierarchy import (OperatorSequence, additive_observable,
                        bbgky_iteration_solution, bbgky_series_solution,
                        clusters_to_density, convergence_time,
                        density_to_clusters, dispersion, dual_bbgky_solution,
                        evolve_correlations, evolve_sequence, expectation,
                        factorized_sequence, hierarchy_rhs, kary_observable,
                        reduce_density, reduce_observable,
                        reduced_correlations)
from .kinetic import (ChaosCheckResult, KineticState, SweepResult,
                      chaos_check, fit_order, gqke_integrate, identity_kernel,
                      kernel_entry_mat, kinetic_generator, limit_observables,
                      meanfield_limit_check, one_particle_series,
                      state_functional, vlasov_integrate)
from .linalg import Operator, embed, partial_trace, tensor, trace_norm
from .scenario import (Scenario, builtin_scenario, load_scenario,
                       parse_scenario)
from .suites import SUITES, Dataset, SuiteRecord, run_suite

__version__ = "0.1.0"

__all__ = [
    "ChaosCheckResult", "ClusterArgument", "ConvergenceError", "Dataset",
    "KineticState", "Operator", "OperatorSequence", "Propagators",
    "QuadratureError", "SUITES", "Scenario", "ScenarioError", "SuiteRecord",
    "SweepResult", "SystemSpec", "TruncationError", "ValidationError",
    "additive_observable", "bbgky_iteration_solution",
    "bbgky_series_solution", "builtin_scenario", "chaos_check",
    "clusters_to_density", "convergence_time", "cumulant",
    "density_to_clusters", "dispersion", "dual_bbgky_solution", "embed",
    "evolve_correlations", "evolve_sequence", "expectation",
    "factorized_sequence", "fit_order", "gqke_integrate", "group_action",
    "hamiltonian", "hierarchy_rhs", "identity_kernel", "kary_observable",
    "kernel_entry_mat", "kinetic_generator", "limit_observables",
    "load_scenario", "meanfield_limit_check", "one_particle_series",
    "parse_scenario", "partial_trace", "reduce_density", "reduce_observable",
    "reduced_correlations", "run_suite", "scattering_group",
    "state_functional", "tensor", "trace_norm", "vlasov_integrate",
]
