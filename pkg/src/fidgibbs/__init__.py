"""Joint fiducial distributions for multiparameter models.

Builds full conditional fiducial distributions from invertible structural
equations, composes them with a systematic-scan Gibbs sampler, checks
proposed joint densities for compatibility with the conditionals, and
reports Monte Carlo estimates with convergence diagnostics.
"""

__version__ = "0.1.0"

from .compat import CompatReport, check_model, ratio_constancy
from .core import (
    ConditionalFiducialSampler,
    FiducialStatistic,
    InjectivityReport,
    StructuralEquation,
    check_injectivity,
)
from .diagnostics import DiagnosticsReport, effective_sample_size, split_rhat, summarize
from .errors import (
    BracketError,
    DegenerateDataError,
    DomainError,
    EvaluationError,
    FidgibbsError,
    StructuralError,
)
from .gibbs import ChainConfig, EstimateResult, SampleMatrix, estimate, run
from .models import Dataset, ModelSpec, MODEL_NAMES, get_model, simulate_dataset
from .randvar import (
    ChiSquare,
    Exponential,
    Gamma,
    Normal,
    RngStream,
    ScaledInvChiSquare,
    StudentT,
    TruncatedNormal,
    log_density,
    quantile,
    sample,
)
from .specfun import (
    Bracket,
    digamma,
    ln_gamma,
    solve_cubic_in_interval,
    solve_monotone,
    solve_quadratic_positive,
    trigamma,
)

__all__ = [
    "__version__",
    "Bracket",
    "BracketError",
    "ChainConfig",
    "ChiSquare",
    "CompatReport",
    "ConditionalFiducialSampler",
    "Dataset",
    "DegenerateDataError",
    "DiagnosticsReport",
    "DomainError",
    "EstimateResult",
    "EvaluationError",
    "Exponential",
    "FiducialStatistic",
    "FidgibbsError",
    "Gamma",
    "InjectivityReport",
    "MODEL_NAMES",
    "ModelSpec",
    "Normal",
    "RngStream",
    "SampleMatrix",
    "ScaledInvChiSquare",
    "StructuralEquation",
    "StructuralError",
    "StudentT",
    "TruncatedNormal",
    "check_injectivity",
    "check_model",
    "digamma",
    "effective_sample_size",
    "estimate",
    "get_model",
    "ln_gamma",
    "log_density",
    "quantile",
    "ratio_constancy",
    "run",
    "sample",
    "simulate_dataset",
    "solve_cubic_in_interval",
    "solve_monotone",
    "solve_quadratic_positive",
    "split_rhat",
    "summarize",
    "trigamma",
]
