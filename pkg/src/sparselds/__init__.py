"""Sparse Bayesian identification of linear-Gaussian state-space models.

The package samples the posterior of the state transition matrix under an
explicit sparsity-pattern model space, using a reversible-jump MCMC scheme
whose samples contain exact zeros.  Utilities cover exact Kalman filtering
and smoothing, EM-based initialisation, posterior summaries, and export of
probabilistic Granger-causality graphs.
"""

from .lgssm import (
    FilterError,
    FilterResult,
    ModelParams,
    SmootherResult,
    kalman_filter,
    log_likelihood,
    random_covariance,
    random_stable_transition,
    rts_smoother,
    simulate,
)
from .model_space import (
    JumpKind,
    ModelProposal,
    SparsityModel,
    k_adjacency,
    log_correction,
    propose_model,
    tpoi_pmf,
    tpoi_sample,
)
from .sampler import (
    Chain,
    ChainState,
    KnownParams,
    LaplaceDist,
    SamplerConfig,
    dense_mcmc_run,
    lambda_penalty,
    load_chain_jsonl,
    propose_parameter,
    rj_run,
    rj_step,
    save_chain_jsonl,
)
from .em import EmError, EmResult, em_estimate
from .analysis import (
    EdgeGraph,
    SparsityMetrics,
    bootstrap_edge_interval,
    classify_sparsity,
    compute_metrics,
    edge_probabilities,
    export_dot,
    posterior_mean,
    trace_diagnostics,
)
from .experiments import (
    ExperimentSpec,
    RunRecord,
    build_regime,
    build_system,
    load_csv_series,
    run_experiment,
    run_seed,
    system_seed,
)

__all__ = [
    "Chain",
    "ChainState",
    "EdgeGraph",
    "EmError",
    "EmResult",
    "ExperimentSpec",
    "FilterError",
    "FilterResult",
    "JumpKind",
    "KnownParams",
    "LaplaceDist",
    "ModelParams",
    "ModelProposal",
    "RunRecord",
    "SamplerConfig",
    "SmootherResult",
    "SparsityMetrics",
    "SparsityModel",
    "bootstrap_edge_interval",
    "build_regime",
    "build_system",
    "classify_sparsity",
    "compute_metrics",
    "dense_mcmc_run",
    "edge_probabilities",
    "em_estimate",
    "export_dot",
    "k_adjacency",
    "kalman_filter",
    "lambda_penalty",
    "load_chain_jsonl",
    "load_csv_series",
    "log_correction",
    "log_likelihood",
    "posterior_mean",
    "propose_model",
    "propose_parameter",
    "random_covariance",
    "random_stable_transition",
    "rj_run",
    "rj_step",
    "rts_smoother",
    "run_experiment",
    "run_seed",
    "save_chain_jsonl",
    "system_seed",
    "simulate",
    "tpoi_pmf",
    "tpoi_sample",
    "trace_diagnostics",
]

__version__ = "0.1.0"
