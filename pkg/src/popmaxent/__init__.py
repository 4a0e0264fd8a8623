"""Synthetic categorical populations from multi-way marginal constraints.

Pipeline: ingest a tabular source population, extract unary/binary/ternary
frequency constraints under a budget, fit a maximum-entropy model (or rake
a weight vector) to the targets, sample integer populations, and score
them with the mean relative constraint error.
"""

__version__ = "0.1.0"

from .core import (
    AttributeSchema,
    MarginalTable,
    Pattern,
    Population,
    decode_cell,
    empirical_frequency,
    encode_cell,
    marginal,
    population_text,
    read_population,
    read_population_text,
    support_size,
    write_population,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    PopmaxentError,
    UnmatchableConstraintError,
    ValidationError,
)
from .extraction import (
    ArityBudget,
    AtomicConstraint,
    ConstraintSet,
    ExtractionBudget,
    RetainedScope,
    arity_counts,
    extract_constraints,
    ipf_fit,
    kl_divergence,
    nmi,
)
from .model import (
    FitReport,
    MaxEntModel,
    SoftFitConfig,
    dual_objective,
    feature_value,
    fit_hard,
    fit_metropolis,
    fit_soft,
    log_partition,
    metropolis_moments,
    model_moments,
    sample_population,
    uniform_model,
)
from .raking import WeightVector, rake, sample_weighted
from .evaluation import (
    BenchmarkGrid,
    BenchmarkProblem,
    BenchmarkReport,
    BenchmarkRow,
    BenchmarkSummary,
    EvalResult,
    mre,
    results_table,
    run_benchmark,
    summary_table,
)

__all__ = [
    "__version__",
    "AttributeSchema", "MarginalTable", "Pattern", "Population",
    "decode_cell", "empirical_frequency", "encode_cell", "marginal",
    "population_text", "read_population", "read_population_text",
    "support_size", "write_population",
    "CapacityError", "ConvergenceError", "PopmaxentError",
    "UnmatchableConstraintError", "ValidationError",
    "ArityBudget", "AtomicConstraint", "ConstraintSet", "ExtractionBudget",
    "RetainedScope", "arity_counts", "extract_constraints", "ipf_fit",
    "kl_divergence", "nmi",
    "FitReport", "MaxEntModel", "SoftFitConfig", "dual_objective",
    "feature_value", "fit_hard", "fit_metropolis", "fit_soft",
    "log_partition", "metropolis_moments", "model_moments",
    "sample_population", "uniform_model",
    "WeightVector", "rake", "sample_weighted",
    "BenchmarkGrid", "BenchmarkProblem", "BenchmarkReport", "BenchmarkRow",
    "BenchmarkSummary", "EvalResult", "mre", "results_table",
    "run_benchmark", "summary_table",
]
