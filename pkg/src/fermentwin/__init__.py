"""Digital twin for ultrasound-assisted yeast fermentation.

A Bayesian single-hidden-layer network maps (temperature, ultrasonic
frequency, duty cycle) to the parameters of a modified Gompertz growth
curve; Random Walk Metropolis samples the posterior; grouped k-fold
cross-validation scores predictions; and a closed-loop simulator selects
actuation settings that optimize predicted growth.
"""

from .growth import (
    GompertzParams,
    GrowthPoint,
    gompertz_curve,
    gompertz_eval,
    inflection_time,
)
from .network import (
    DEFAULT_RANGES,
    DEFAULT_TOPOLOGY,
    NetworkState,
    NetworkTopology,
    OutputRanges,
    PriorSpec,
    forward,
    forward_many,
    load_prior,
    log_prior,
    noninformative_prior,
    save_prior,
)
from .sampler import (
    PosteriorChain,
    SamplerConfig,
    SamplerError,
    adapt_scales,
    rwm_step,
    run_chain,
)
from .data import (
    CSV_COLUMNS,
    FeatureBounds,
    FoldAssignment,
    GrowthDataset,
    GrowthGroup,
    NormalizationClampWarning,
    RawRecord,
    load_records,
    normalize,
    round_robin_folds,
    save_records,
)
from .posterior import (
    GrowthModel,
    fit_growth_model,
    fit_posterior,
    log_likelihood,
    log_posterior,
    make_log_posterior,
)
from .evaluation import (
    MetricsReport,
    PredictionPair,
    PredictiveCurve,
    cross_validate,
    mape,
    median_ape,
    mse,
    posterior_params,
    predictive_curve,
)
from .chainio import load_model, save_model
from .twin import (
    ActuatorSetting,
    PlantConfig,
    PlantState,
    SensorReading,
    TwinLog,
    TwinLogEntry,
    TwinLoopError,
    TwinSchedule,
    act_select,
    plant_observe,
    run_twin_loop,
    sense_temperature,
)
from .estimator import BayesGompertzRegressor, records_to_xy

__version__ = "0.1.0"

__all__ = [
    "GompertzParams",
    "GrowthPoint",
    "gompertz_eval",
    "gompertz_curve",
    "inflection_time",
    "NetworkTopology",
    "NetworkState",
    "PriorSpec",
    "OutputRanges",
    "DEFAULT_TOPOLOGY",
    "DEFAULT_RANGES",
    "forward",
    "forward_many",
    "log_prior",
    "noninformative_prior",
    "load_prior",
    "save_prior",
    "SamplerConfig",
    "PosteriorChain",
    "SamplerError",
    "rwm_step",
    "run_chain",
    "adapt_scales",
    "CSV_COLUMNS",
    "RawRecord",
    "FeatureBounds",
    "GrowthGroup",
    "GrowthDataset",
    "FoldAssignment",
    "NormalizationClampWarning",
    "load_records",
    "save_records",
    "normalize",
    "round_robin_folds",
    "GrowthModel",
    "log_likelihood",
    "log_posterior",
    "make_log_posterior",
    "fit_posterior",
    "fit_growth_model",
    "MetricsReport",
    "PredictiveCurve",
    "PredictionPair",
    "mape",
    "median_ape",
    "mse",
    "posterior_params",
    "predictive_curve",
    "cross_validate",
    "save_model",
    "load_model",
    "ActuatorSetting",
    "SensorReading",
    "PlantConfig",
    "PlantState",
    "TwinSchedule",
    "TwinLog",
    "TwinLogEntry",
    "TwinLoopError",
    "sense_temperature",
    "plant_observe",
    "act_select",
    "run_twin_loop",
    "BayesGompertzRegressor",
    "records_to_xy",
    "__version__",
]
