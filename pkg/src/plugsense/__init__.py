"""Presence detection from plug-load power traces.

Core pieces: windowed power features over a shared time-series data model,
per-view KDE Bayes classifiers with majority voting, a self-training engine
with noise-rate estimation and early stopping, supervised threshold
baselines, auxiliary sensor decision rules, a ground-truth simulator, and
evaluation metrics. A FastAPI service (``plugsense.service``) and a thin CLI
client (``plugsense.cli``) wire the stages into file-based runs.
"""

__version__ = "0.1.0"

from .errors import (
    AlgorithmError,
    DataError,
    DegenerateLabelingError,
    EstimatorInfeasibleError,
    PlugsenseError,
    UsageError,
)
from .features import DEFAULT_VIEWS, VIEW_NAMES, FeatureMatrix, FeatureVector, build_views
from .kde import ViewClassifier, classify, fit_view, kde_density, majority_vote, select_bandwidth
from .metrics import DetectionRates, detection_rates, hourly_absence, iteration_curve
from .selftrain import (
    NoiseEstimate,
    PriorQuantities,
    PriorSchedule,
    SelfTrainConfig,
    SelfTrainResult,
    estimate_noise,
    init_from_prior,
    run_self_training,
    search_rates,
    stopping_metric,
    update_labels,
)
from .simulate import PRESETS, DeviceProfile, SensorNoise, UserProfile, get_preset, simulate_sensors, simulate_user
from .trace import LabelPartition, PowerTrace, PresenceSeries, Window, WindowSpec, windowize

__all__ = [
    "AlgorithmError",
    "DataError",
    "DEFAULT_VIEWS",
    "DegenerateLabelingError",
    "DetectionRates",
    "DeviceProfile",
    "EstimatorInfeasibleError",
    "FeatureMatrix",
    "FeatureVector",
    "LabelPartition",
    "NoiseEstimate",
    "PlugsenseError",
    "PowerTrace",
    "PRESETS",
    "PresenceSeries",
    "PriorQuantities",
    "PriorSchedule",
    "SelfTrainConfig",
    "SelfTrainResult",
    "SensorNoise",
    "UsageError",
    "UserProfile",
    "VIEW_NAMES",
    "ViewClassifier",
    "Window",
    "WindowSpec",
    "build_views",
    "classify",
    "detection_rates",
    "estimate_noise",
    "fit_view",
    "get_preset",
    "hourly_absence",
    "init_from_prior",
    "iteration_curve",
    "kde_density",
    "majority_vote",
    "run_self_training",
    "search_rates",
    "select_bandwidth",
    "simulate_sensors",
    "simulate_user",
    "stopping_metric",
    "update_labels",
    "windowize",
]
