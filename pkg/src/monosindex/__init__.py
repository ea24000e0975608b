"""Index estimation for the monotone single index model.

A library plus CLI that estimates the unit-norm index vector of
Y = link(alpha' X) + noise with an unknown nondecreasing link, via six
estimators (profile LSE, simple and efficient score estimators, penalized
least squares, linear least squares, maximum rank correlation), computes
their limiting covariance targets, and runs seeded replication studies.
"""

from .asymptotics import (
    CovarianceTarget,
    asymptotic_cov_ese,
    asymptotic_cov_linear,
    asymptotic_cov_sse,
    moore_penrose_psd,
)
from .estimators import (
    ESTIMATOR_NAMES,
    EstimateResult,
    LinearLink,
    LinearSolveDiagnostics,
    PipelineConfig,
    SingularDesignError,
    estimate_ese,
    estimate_linear,
    estimate_lse,
    estimate_mre,
    estimate_plse,
    estimate_sse,
    rank_concordance,
    warm_start_pipeline,
)
from .isotonic import StepFunction, eval_step, fit_monotone_ls, pava
from .kernel import BandwidthRule, KernelSpec, default_bandwidth, derivative_estimate, kernel_eval
from .model import (
    IndexProjection,
    ModelSpec,
    Sample,
    conditional_mean_cubic,
    cubic_normal_spec,
    derive_seed,
    generate_sample,
    project_sample,
)
from .score import ScoreValue, ese_score, plse_score, project_orthogonal, score_norm_objective, sse_score
from .search import SearchOptions, SearchResult, hooke_jeeves, nelder_mead, random_unit_starts
from .simulate import (
    BoxplotStats,
    EstimatorSummary,
    ReplicationRow,
    SimConfig,
    SimulationSummary,
    boxplot_stats,
    run_replications,
    summarize,
)
from .spline import SplineFit, eval_spline, eval_spline_derivative, fit_smoothing_spline, roughness

__version__ = "0.1.0"
