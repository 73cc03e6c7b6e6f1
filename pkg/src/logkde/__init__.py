"""Kernel density estimation for strictly positive data via the log transform."""

__version__ = "0.1.0"

from .bandwidth import (
    BandwidthSpec,
    SigmaEstimate,
    bw_bcv,
    bw_logcv,
    bw_logG,
    bw_nrd,
    bw_nrd0,
    bw_sj,
    bw_ucv,
    estimate_sigma,
    select_bandwidth,
)
from .errors import (
    ConfigError,
    DegenerateSampleError,
    DivergentFunctionalError,
    DomainError,
    LogKDEError,
    OptimizationError,
    ParseError,
    UnsupportedError,
)
from .estimator import (
    DensityEstimate,
    EvaluationGrid,
    FftConfig,
    Sample,
    log_kde,
    log_kde_direct,
    log_kde_fft,
    naive_kde_direct,
)
from .kernels import KernelKind, kernel_constants, kernel_eval, log_kernel_eval
from .simulate import SimulationConfig, estimate_iae, estimate_ise, run_study, sample_target
from .theory import (
    AsymptoticReport,
    TargetDensity,
    amise,
    amise_min,
    bias_approx,
    h_star,
    lognormal_h_star,
    mse_approx,
    variance_approx,
)
