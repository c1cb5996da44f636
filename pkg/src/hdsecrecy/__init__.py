"""Secrecy-rate toolkit for half-duplex friendly-jamming schemes."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ChannelConfig,
    ConfigurationError,
    ContractViolation,
    GeometryConfig,
    PowerDistribution,
    distance_ratio_from_power_gap,
)
from .classifier import (  # noqa: E402
    BlindClassifier,
    MisclassProfile,
    MlClassifier,
    PerfectClassifier,
    TdmDetectionProfile,
    ThresholdClassifier,
    Window,
    misclass_profile,
    tdm_detection_profile,
)
from .rates import binary_entropy, tdm_bounds, twoway_bounds  # noqa: E402
from .montecarlo import SimConfig, compare_profiles, simulate  # noqa: E402
from .optimizer import SearchGrid, optimize_tdm, optimize_twoway, sweep_ratio  # noqa: E402

__all__ = [
    "BlindClassifier", "ChannelConfig", "ConfigurationError", "ContractViolation",
    "GeometryConfig", "MisclassProfile", "MlClassifier", "PerfectClassifier", "PowerDistribution",
    "SearchGrid", "SimConfig", "TdmDetectionProfile", "ThresholdClassifier", "Window",
    "binary_entropy", "compare_profiles", "distance_ratio_from_power_gap", "misclass_profile",
    "optimize_tdm", "optimize_twoway", "simulate", "sweep_ratio", "tdm_bounds",
    "tdm_detection_profile", "twoway_bounds",
]
