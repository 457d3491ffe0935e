"""Push-sum averaging and distributed subgradient optimization over
directed, time-varying, unbalanced graphs.

The package simulates ratio consensus (push-sum) and four subgradient
schemes built on it, checks the exact identities the dynamics satisfy,
and evaluates the finite-time error bounds the schemes come with.
"""

from .analysis import (
    BoundInputs,
    RateFit,
    RunMetrics,
    SgpConstants,
    bound_heterogeneous,
    bound_inputs_from_trace,
    bound_per_agent,
    bound_sgp,
    bound_subgradient_push_fixed,
    bound_subgradient_push_varying,
    compute_metrics,
    consensus_error,
    consensus_error_series,
    estimate_k1,
    fit_rate,
    k2_constant,
    lyapunov_series,
    running_average_iterates,
    sgp_constants,
    verify_descent_recursion,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    build_graph_sequence,
    build_objective,
    build_oracle,
    build_schedule,
    build_sigma,
    build_weights,
    load_config,
    parse_config,
)
from .graphs import (
    DirectedGraph,
    GraphSequence,
    complete_graph,
    directed_ring,
    generate_sequence,
    is_strongly_connected,
    is_uniformly_strongly_connected,
    load_sequence,
    save_sequence,
    strongly_connected_components,
    undirected_ring,
    union_graph,
)
from .optim import (
    ALGORITHMS,
    GradientOracle,
    Objective,
    StepSchedule,
    SwitchingSignal,
    absolute_deviation_objective,
    all_ones_signal,
    all_zeros_signal,
    alternating_signal,
    bernoulli_signal,
    constant_step,
    fixed_inv_sqrt,
    harmonic,
    heterogeneous_step,
    huber_objective,
    push_subgradient_step,
    quadratic_objective,
    run_optimizer,
    sgp_step,
    sgp_strong,
    stochastic_gradient,
    subgradient,
    subgradient_push_step,
    table_signal,
    weighted_average_state,
)
from .pushsum import (
    DegenerateStateError,
    NetworkState,
    TheoreticalConstants,
    Trace,
    absolute_probability,
    absolute_probability_violation,
    phi_product,
    pushsum_step,
    ratio,
    run_pushsum,
    run_weighted_pushsum,
    s_matrix,
    theoretical_constants,
    verify_absolute_probability,
    verify_product_limit,
    verify_ratio_identity,
)
from .weights import (
    WeightMatrix,
    WeightReport,
    default_weights,
    load_weights,
    save_weights,
    validate_weights,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BoundInputs",
    "ConfigError",
    "DegenerateStateError",
    "DirectedGraph",
    "ExperimentConfig",
    "GradientOracle",
    "GraphSequence",
    "NetworkState",
    "Objective",
    "RateFit",
    "RunMetrics",
    "SgpConstants",
    "StepSchedule",
    "SwitchingSignal",
    "TheoreticalConstants",
    "Trace",
    "WeightMatrix",
    "WeightReport",
    "absolute_deviation_objective",
    "absolute_probability",
    "absolute_probability_violation",
    "all_ones_signal",
    "all_zeros_signal",
    "alternating_signal",
    "bernoulli_signal",
    "bound_heterogeneous",
    "bound_inputs_from_trace",
    "bound_per_agent",
    "bound_sgp",
    "bound_subgradient_push_fixed",
    "bound_subgradient_push_varying",
    "build_graph_sequence",
    "build_objective",
    "build_oracle",
    "build_schedule",
    "build_sigma",
    "build_weights",
    "complete_graph",
    "compute_metrics",
    "consensus_error",
    "consensus_error_series",
    "constant_step",
    "default_weights",
    "directed_ring",
    "estimate_k1",
    "fit_rate",
    "fixed_inv_sqrt",
    "generate_sequence",
    "harmonic",
    "heterogeneous_step",
    "huber_objective",
    "is_strongly_connected",
    "is_uniformly_strongly_connected",
    "k2_constant",
    "load_config",
    "load_sequence",
    "load_weights",
    "lyapunov_series",
    "parse_config",
    "phi_product",
    "push_subgradient_step",
    "pushsum_step",
    "quadratic_objective",
    "ratio",
    "run_optimizer",
    "run_pushsum",
    "run_weighted_pushsum",
    "running_average_iterates",
    "s_matrix",
    "save_sequence",
    "save_weights",
    "sgp_constants",
    "sgp_step",
    "sgp_strong",
    "stochastic_gradient",
    "strongly_connected_components",
    "subgradient",
    "subgradient_push_step",
    "table_signal",
    "theoretical_constants",
    "undirected_ring",
    "union_graph",
    "validate_weights",
    "verify_absolute_probability",
    "verify_descent_recursion",
    "verify_product_limit",
    "verify_ratio_identity",
    "weighted_average_state",
]
