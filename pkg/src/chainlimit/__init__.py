"""Lattice Markov-chain network models, their continuum PDE limits, and
the machinery to quantify how well the two descriptions agree."""

from .errors import (
    BudgetError,
    ChainlimitError,
    ConfigurationError,
    DomainError,
    InstabilityError,
)
from .grids import (
    FieldSpec,
    GridSpec,
    ModelParams,
    ProbabilityTables,
    derive_probabilities,
    eval_field,
    node_position,
)
from .metrics import ComparisonReport, build_report, data_coverage, fit_rate, sup_error
from .models import (
    ChainState,
    RngStream,
    drift_network_1d,
    drift_network_2d,
    drift_random_walk,
    one_step_statistics,
    step_network_1d,
    step_network_2d,
    step_random_walk,
)
from .pde import (
    PdeProblem,
    refined_grid,
    rhs_net1d,
    rhs_net2d,
    rhs_rw1d,
    sample_on_chain_grid,
    solve,
    solve_on_chain_lattice,
    stability_bound,
)
from .scenarios import (
    Scenario,
    parse_scenario,
    preset,
    preset_names,
    run_convergence_suite,
    run_scenario,
)
from .simulate import (
    SpaceTimeField,
    Trajectory,
    extend_to_field,
    initial_state,
    run_chain,
    run_drift_recursion,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "ChainState",
    "ChainlimitError",
    "ComparisonReport",
    "ConfigurationError",
    "DomainError",
    "FieldSpec",
    "GridSpec",
    "InstabilityError",
    "ModelParams",
    "PdeProblem",
    "ProbabilityTables",
    "RngStream",
    "Scenario",
    "SpaceTimeField",
    "Trajectory",
    "build_report",
    "data_coverage",
    "derive_probabilities",
    "drift_network_1d",
    "drift_network_2d",
    "drift_random_walk",
    "eval_field",
    "extend_to_field",
    "fit_rate",
    "initial_state",
    "node_position",
    "one_step_statistics",
    "parse_scenario",
    "preset",
    "preset_names",
    "refined_grid",
    "rhs_net1d",
    "rhs_net2d",
    "rhs_rw1d",
    "run_chain",
    "run_convergence_suite",
    "run_drift_recursion",
    "run_scenario",
    "sample_on_chain_grid",
    "solve",
    "solve_on_chain_lattice",
    "stability_bound",
    "step_network_1d",
    "step_network_2d",
    "step_random_walk",
    "sup_error",
]
