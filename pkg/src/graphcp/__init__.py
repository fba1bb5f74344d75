"""Bayesian changepoint detection across multiple time series whose
changepoints are coupled through an undirected dependency graph."""

from .core import (
    AuxiliaryField,
    ChangepointState,
    ConfigurationError,
    DeltaPrior,
    DependencyGraph,
    Hyperparameters,
    IngestionError,
    InvalidLagError,
    InvalidStateError,
    LaggedState,
    SeriesPanel,
    WindowPrior,
    derive_positions,
    from_matrix,
    to_matrix,
)
from .estimator import bayes_estimate, expected_loss, marginal_summaries, matching_loss
from .graphs import (
    build_lattice,
    build_rchain,
    build_star,
    connectedness_scores,
    scale_weights,
)
from .likelihood import (
    MultinomialDirichlet,
    PoissonGamma,
    SegmentCache,
    log_lik_full,
    log_segment_lik,
)
from .prior import (
    enumerate_lag_vectors,
    lag_set_cardinality,
    log_full_conditional_prior,
    log_joint_prior_lagged,
    log_mrf_prior_unnorm,
    log_window_prior,
)
from .sampler import (
    ChainEngine,
    ChainState,
    PosteriorSample,
    SamplerConfig,
    clusters_at,
    run_chain,
    sample_aux_field,
)
from .simulation import Scenario, run_experiment, simulate_panel

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryField",
    "ChainEngine",
    "ChainState",
    "ChangepointState",
    "ConfigurationError",
    "DeltaPrior",
    "DependencyGraph",
    "Hyperparameters",
    "IngestionError",
    "InvalidLagError",
    "InvalidStateError",
    "LaggedState",
    "MultinomialDirichlet",
    "PoissonGamma",
    "PosteriorSample",
    "SamplerConfig",
    "Scenario",
    "SegmentCache",
    "SeriesPanel",
    "WindowPrior",
    "bayes_estimate",
    "build_lattice",
    "build_rchain",
    "build_star",
    "clusters_at",
    "connectedness_scores",
    "derive_positions",
    "enumerate_lag_vectors",
    "expected_loss",
    "from_matrix",
    "lag_set_cardinality",
    "log_full_conditional_prior",
    "log_joint_prior_lagged",
    "log_lik_full",
    "log_mrf_prior_unnorm",
    "log_segment_lik",
    "log_window_prior",
    "marginal_summaries",
    "matching_loss",
    "run_chain",
    "run_experiment",
    "sample_aux_field",
    "scale_weights",
    "simulate_panel",
    "to_matrix",
]
