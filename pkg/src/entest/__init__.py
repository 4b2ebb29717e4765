"""Location estimation for entangled single-sample mixtures.

Estimators (modal interval, shorth, k-median, hybrid, Lepski-calibrated
modal, modal regression), a population oracle for mixture masses and
quantile radii, deterministic generators for the running example families,
and a Monte Carlo sweep harness for average-error tables.
"""

from .errors import (
    DimensionError,
    EmptyDataError,
    EntestError,
    GridTooSmallError,
    InsufficientDataError,
    InvalidParamError,
    ProblemTooLargeError,
    UnreachableMassError,
)
from .estimators_1d import (
    CLAMPED,
    LEPSKI_FALLBACK,
    TIE_BROKEN,
    Dataset1D,
    LocationEstimate,
    MedianInterval,
    default_k1,
    default_k2,
    hybrid_1d,
    k_median_interval,
    lepski_modal_1d,
    modal_interval_1d,
    shorth_1d,
)
from .estimators_nd import (
    Cuboid,
    DatasetND,
    LocationEstimateND,
    hybrid_nd,
    median_cuboid,
    modal_ball_efficient,
    shorth_efficient,
)
from .population import (
    BallMassEstimate,
    ComponentDist,
    MixtureModel,
    PropertyCheck,
    PropertyReport,
    ball_mass_nd,
    check_lemma1_properties,
    interval_mass,
    radius_for_mass,
)
from .regression import (
    DEGENERATE_FALLBACK,
    RegressionDataset,
    RegressionEstimate,
    modal_regression,
    regression_objective,
)
from .simgen import (
    EstimatorConfig,
    GeneratorSpec,
    SweepResult,
    SweepRow,
    SweepSpec,
    fit_loglog_slope,
    generate,
    mean_center,
    median_center,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BallMassEstimate", "CLAMPED", "ComponentDist", "Cuboid", "Dataset1D",
    "DatasetND", "DEGENERATE_FALLBACK", "DimensionError", "EmptyDataError",
    "EntestError", "EstimatorConfig", "GeneratorSpec", "GridTooSmallError",
    "InsufficientDataError", "InvalidParamError", "LEPSKI_FALLBACK",
    "LocationEstimate", "LocationEstimateND", "MedianInterval", "MixtureModel",
    "ProblemTooLargeError", "PropertyCheck", "PropertyReport",
    "RegressionDataset", "RegressionEstimate", "SweepResult", "SweepRow",
    "SweepSpec", "TIE_BROKEN", "UnreachableMassError", "ball_mass_nd",
    "check_lemma1_properties", "default_k1", "default_k2", "fit_loglog_slope",
    "generate", "hybrid_1d", "hybrid_nd", "interval_mass", "k_median_interval",
    "lepski_modal_1d", "mean_center", "median_center", "median_cuboid",
    "modal_ball_efficient", "modal_interval_1d", "modal_regression",
    "radius_for_mass", "regression_objective", "run_sweep", "shorth_1d",
    "shorth_efficient",
]
