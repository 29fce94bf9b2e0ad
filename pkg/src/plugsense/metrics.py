"""Evaluation metrics: per-class detection rates, hourly absence, learning curves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .selftrain import IterationRecord
from .trace import ABSENT, PRESENT, LABEL_PRESENT, PresenceSeries


@dataclass(frozen=True)
class DetectionRates:
    """Conditional accuracy during truly-absent / truly-present windows.

    A class missing from the truth gets rate 1.0 by convention and a flag;
    its weight in the overall rate is zero, so the weighted identity
    overall = absence_rate * P(absent) + presence_rate * P(present) holds
    regardless.
    """

    absence_rate: float
    presence_rate: float
    overall: float
    absence_defined: bool = True
    presence_defined: bool = True


def detection_rates(pred: PresenceSeries, truth: PresenceSeries) -> DetectionRates:
    if len(pred) != len(truth):
        raise DataError("length mismatch")
    if not np.array_equal(pred.window_starts, truth.window_starts):
        raise DataError("prediction and truth cover different windows")
    match = pred.states == truth.states
    absent = truth.states == ABSENT
    present = ~absent
    n = len(truth)
    n_abs = int(absent.sum())
    n_pres = n - n_abs
    absence_rate = float(match[absent].mean()) if n_abs else 1.0
    presence_rate = float(match[present].mean()) if n_pres else 1.0
    overall = absence_rate * (n_abs / n) + presence_rate * (n_pres / n)
    return DetectionRates(
        absence_rate=absence_rate,
        presence_rate=presence_rate,
        overall=overall,
        absence_defined=n_abs > 0,
        presence_defined=n_pres > 0,
    )


@dataclass(frozen=True)
class HourlyAbsence:
    """Per hour-of-day absence fraction; hours without windows hold NaN."""

    rates: np.ndarray          # 24 floats
    window_counts: np.ndarray  # 24 ints


def hourly_absence(series: PresenceSeries) -> HourlyAbsence:
    if len(series) == 0:
        raise DataError("empty input")
    hours = (series.window_starts // 3600) % 24
    counts = np.bincount(hours, minlength=24).astype(np.int64)
    absents = np.bincount(hours, weights=(series.states == ABSENT), minlength=24)
    rates = np.full(24, np.nan)
    nonzero = counts > 0
    rates[nonzero] = absents[nonzero] / counts[nonzero]
    return HourlyAbsence(rates=rates, window_counts=counts)


@dataclass(frozen=True)
class IterationCurve:
    misclassification: np.ndarray  # one value per retained round
    stop_fired: np.ndarray         # bool per round


def iteration_curve(
    diagnostics: tuple[IterationRecord, ...],
    labelings,
    truth: PresenceSeries,
) -> IterationCurve:
    """Misclassification against truth per retained round, with stop markers."""
    if not labelings:
        raise DataError("per-round labelings were not retained (enable retain_labelings)")
    if len(labelings) != len(diagnostics):
        raise DataError("labelings and diagnostics must cover the same rounds")
    mis = np.empty(len(labelings))
    for i, labeling in enumerate(labelings):
        states = (np.asarray(labeling) == LABEL_PRESENT).astype(np.int8)
        pred = PresenceSeries(truth.window_starts, states)
        mis[i] = 1.0 - detection_rates(pred, truth).overall
    fired = np.array([r.stopped for r in diagnostics], dtype=bool)
    return IterationCurve(misclassification=mis, stop_fired=fired)
