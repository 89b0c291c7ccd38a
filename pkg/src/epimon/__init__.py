"""Sequential Bayesian estimation of SEIRD epidemic rates with change monitoring.

The pipeline couples a sampling-importance-resampling particle filter over
the four transition rates of an SEIRD compartment model with a multivariate
EWMA control chart on the day-to-day movement of the posterior samples, so
that shifts in epidemic dynamics surface as chart signals within days.
"""

from .config import RunConfig, build_config, load_config_file
from .dynamics import (
    IntegrationError,
    ParamVector,
    StateVector,
    Trajectory,
    UndefinedR0Error,
    compute_r0,
    integrate_day,
    integrate_days,
    seird_rhs,
)
from .filter import (
    FilterConfig,
    FilterOutput,
    KernelSpec,
    Particle,
    ParticleCloud,
    PriorSpec,
    TotalDepletionError,
    augment,
    init_cloud,
    normalize,
    resample,
    run_filter,
    step_filter,
    substream,
    weigh,
)
from .ingest import (
    DataIntegrityError,
    FormatError,
    ObservationSeries,
    RawSeries,
    RegionNotFoundError,
    derive_observations,
    parse_jhu_csv,
)
from .likelihood import Observation, obs_loglik, poisson_logpmf
from .monitor import (
    DeltaSample,
    MewmaState,
    SingularCovarianceError,
    check_signal,
    chi2_quantile,
    difference_samples,
    mewma_update,
    run_monitor,
    run_monitor_arrays,
    t2,
)
from .report import (
    PredictiveSummary,
    UndefinedMetricError,
    coverage,
    predictive_summary,
    pseudo_r2,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "build_config",
    "load_config_file",
    "IntegrationError",
    "ParamVector",
    "StateVector",
    "Trajectory",
    "UndefinedR0Error",
    "compute_r0",
    "integrate_day",
    "integrate_days",
    "seird_rhs",
    "FilterConfig",
    "FilterOutput",
    "KernelSpec",
    "Particle",
    "ParticleCloud",
    "PriorSpec",
    "TotalDepletionError",
    "augment",
    "init_cloud",
    "normalize",
    "resample",
    "run_filter",
    "step_filter",
    "substream",
    "weigh",
    "DataIntegrityError",
    "FormatError",
    "ObservationSeries",
    "RawSeries",
    "RegionNotFoundError",
    "derive_observations",
    "parse_jhu_csv",
    "Observation",
    "obs_loglik",
    "poisson_logpmf",
    "DeltaSample",
    "MewmaState",
    "SingularCovarianceError",
    "check_signal",
    "chi2_quantile",
    "difference_samples",
    "mewma_update",
    "run_monitor",
    "run_monitor_arrays",
    "t2",
    "PredictiveSummary",
    "UndefinedMetricError",
    "coverage",
    "predictive_summary",
    "pseudo_r2",
    "simulate",
]
