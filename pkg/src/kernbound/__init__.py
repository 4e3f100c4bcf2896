"""
kernbound: Rademacher complexity bounds, estimates and generalization
certificates for learned combinations of base kernels.
"""

from .bounds import (
    ceiling_bound,
    comparator_sb,
    continuous_minimum,
    intermediate_bound,
    optimize_even_r,
    sweep_bounds,
    sweep_closed_forms,
    trace_bound,
)
from .certify import certify
from .config import RunConfig, load_config
from .datasets import load_sample
from .domain import (
    BoundReport,
    Certificate,
    CombinationWeights,
    HypothesisFamily,
    InequalityResult,
    KernelSpec,
    MarginConfig,
    NotApplicable,
    OracleResult,
    RademacherEstimate,
    Sample,
)
from .errors import (
    CapacityError,
    ConfigError,
    ConstraintError,
    DataError,
    DegenerateDataError,
    ErrorCode,
    ExitCode,
    InputError,
    KernboundError,
    MembershipError,
    ParameterError,
    PsdViolationError,
)
from .kernels import GramMatrix, KernelDictionary, build_dictionary, combine, compute_gram, validate_psd
from .learner import Model, predict, train
from .options import BoundChoice, BoundForm, EstimateMethod, Family, KernelKind
from .rademacher import brute_force_sup, estimate_exact, estimate_many, estimate_mc, sup_closed_form
from .reports import TOOL_VERSION as __version__
from .sdk import KernboundSDK, SDKResult

__all__ = [
    "BoundChoice",
    "BoundForm",
    "BoundReport",
    "CapacityError",
    "Certificate",
    "CombinationWeights",
    "ConfigError",
    "ConstraintError",
    "DataError",
    "DegenerateDataError",
    "ErrorCode",
    "EstimateMethod",
    "ExitCode",
    "Family",
    "GramMatrix",
    "HypothesisFamily",
    "InequalityResult",
    "InputError",
    "KernboundError",
    "KernboundSDK",
    "KernelDictionary",
    "KernelKind",
    "KernelSpec",
    "MarginConfig",
    "MembershipError",
    "Model",
    "NotApplicable",
    "OracleResult",
    "ParameterError",
    "PsdViolationError",
    "RademacherEstimate",
    "RunConfig",
    "SDKResult",
    "Sample",
    "brute_force_sup",
    "build_dictionary",
    "ceiling_bound",
    "certify",
    "combine",
    "comparator_sb",
    "compute_gram",
    "continuous_minimum",
    "estimate_exact",
    "estimate_many",
    "estimate_mc",
    "intermediate_bound",
    "load_config",
    "load_sample",
    "optimize_even_r",
    "predict",
    "sup_closed_form",
    "sweep_bounds",
    "sweep_closed_forms",
    "trace_bound",
    "train",
    "validate_psd",
]
