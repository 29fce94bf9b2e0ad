"""Supervised threshold baselines and their grid optimization.

Three model kinds:

* ``absolute``: present whenever the window's mean power exceeds a threshold.
* ``change``: a state machine that toggles presence whenever the window's
  largest sample-to-sample change exceeds a threshold.
* ``percentage``: like ``change`` but on relative change, with the previous
  sample floored at 0.1 W so near-zero standby power cannot blow up a ratio.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .trace import ABSENT, PRESENT, PresenceSeries, Window

MODEL_KINDS = ("absolute", "change", "percentage")
PERCENT_FLOOR_WATTS = 0.1


@dataclass(frozen=True)
class ThresholdModel:
    kind: str
    threshold: float
    initial_state: int = ABSENT

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DataError(f"unknown model kind {self.kind!r}")
        if not self.threshold > 0:
            raise DataError("threshold must be > 0")
        if self.initial_state not in (PRESENT, ABSENT):
            raise DataError("initial_state must be 0 or 1")


def change_metric(windows: list[Window]) -> np.ndarray:
    """Largest absolute sample-to-sample change per window (watts)."""
    return np.array([np.max(np.abs(np.diff(w.watts))) for w in windows])


def percentage_metric(windows: list[Window]) -> np.ndarray:
    """Largest relative sample-to-sample change per window (fraction)."""
    out = np.empty(len(windows))
    for i, w in enumerate(windows):
        x = w.watts
        denom = np.maximum(x[:-1], PERCENT_FLOOR_WATTS)
        out[i] = np.max(np.abs(np.diff(x)) / denom)
    return out


def infer_absolute(window_starts, mean_power, threshold: float) -> PresenceSeries:
    """Present exactly where the window mean power exceeds the threshold."""
    if not threshold > 0:
        raise DataError("threshold must be > 0")
    states = (np.asarray(mean_power, dtype=np.float64) > threshold).astype(np.int8)
    return PresenceSeries(np.asarray(window_starts, dtype=np.int64), states)


def infer_transition(
    window_starts,
    metric,
    threshold: float,
    initial_state: int = ABSENT,
) -> PresenceSeries:
    """Toggle the state at every window whose metric exceeds the threshold.

    The toggling window already carries the new state.
    """
    if not threshold > 0:
        raise DataError("threshold must be > 0")
    exceed = np.asarray(metric, dtype=np.float64) > threshold
    parity = np.cumsum(exceed) % 2
    states = (initial_state ^ parity).astype(np.int8)
    return PresenceSeries(np.asarray(window_starts, dtype=np.int64), states)


def default_grid(kind: str, metric: np.ndarray) -> np.ndarray:
    """0.5 W steps up to the metric maximum for watt-valued models; 0.01 steps
    over (0, 2] for the percentage model."""
    if kind == "percentage":
        return np.round(np.arange(1, 201) * 0.01, 10)
    top = float(np.max(metric)) if len(metric) else 0.5
    return np.arange(0.5, max(top, 0.5) + 0.5, 0.5)


def _accuracy_matrix(kind, metric, truth_states, grid, initial_state):
    if kind == "absolute":
        pred = metric[None, :] > grid[:, None]
    else:
        exceed = metric[None, :] > grid[:, None]
        pred = (initial_state ^ (np.cumsum(exceed, axis=1) % 2)).astype(bool)
    return (pred == (truth_states[None, :] == PRESENT)).mean(axis=1)


def optimize_threshold(
    kind: str,
    metric,
    truth: PresenceSeries,
    grid=None,
    initial_state: int = ABSENT,
) -> tuple[float, float]:
    """Exhaustive scan of the grid; returns (best threshold, overall accuracy).

    Ties go to the smallest threshold.
    """
    if kind not in MODEL_KINDS:
        raise DataError(f"unknown model kind {kind!r}")
    metric = np.asarray(metric, dtype=np.float64)
    if len(metric) != len(truth):
        raise DataError("truth not aligned with features")
    grid = default_grid(kind, metric) if grid is None else np.asarray(grid, dtype=np.float64)
    if len(grid) == 0:
        raise DataError("empty threshold grid")
    acc = _accuracy_matrix(kind, metric, truth.states, grid, initial_state)
    best = int(np.argmax(acc))
    return float(grid[best]), float(acc[best])


def apply_model(model: ThresholdModel, window_starts, windows, mean_power) -> PresenceSeries:
    """Run a fitted model over precomputed windows."""
    if model.kind == "absolute":
        return infer_absolute(window_starts, mean_power, model.threshold)
    metric = change_metric(windows) if model.kind == "change" else percentage_metric(windows)
    return infer_transition(window_starts, metric, model.threshold, model.initial_state)
