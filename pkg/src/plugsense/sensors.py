"""Decision rules for the auxiliary sensing modalities.

Ultrasonic ranging, chair-mounted acceleration, and WiFi association events
each get the straightforward rule used for cross-checking power-based
inference: distance outside the per-user absence intervals, acceleration
magnitude spread above a threshold, and proximity in time to an association
event, respectively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .trace import PresenceSeries

SOUND_SPEED_M_S = 340.0


@dataclass(frozen=True)
class UltrasonicConfig:
    """Absence is declared inside any of the (closed) distance intervals."""

    absence_intervals: tuple[tuple[float, float], ...] = ((2.0, math.inf),)
    sound_speed: float = SOUND_SPEED_M_S

    def __post_init__(self):
        if self.sound_speed <= 0:
            raise DataError("sound speed must be positive")
        prev_end = -math.inf
        for a, b in sorted(self.absence_intervals):
            if a > b:
                raise DataError("interval bounds must satisfy a <= b")
            if a < prev_end:
                raise DataError("absence intervals must not overlap")
            prev_end = b


@dataclass(frozen=True)
class AccelConfig:
    theta: float = 0.03  # g units
    window: int = 60     # samples per sigma computation

    def __post_init__(self):
        if self.theta <= 0:
            raise DataError("theta must be positive")
        if self.window < 2:
            raise DataError("need at least two samples per window")


@dataclass(frozen=True)
class WifiConfig:
    delta: float = 3600.0  # presence half-width in seconds

    def __post_init__(self):
        if self.delta <= 0:
            raise DataError("delta must be positive")


def ultrasonic_distance(delta_t, cfg: UltrasonicConfig = UltrasonicConfig()):
    """Echo distance: half the round-trip time times the speed of sound."""
    dt = np.asarray(delta_t, dtype=np.float64)
    if np.any(dt < 0):
        raise DataError("round-trip time must be nonnegative")
    out = 0.5 * dt * cfg.sound_speed
    return float(out) if np.isscalar(delta_t) else out


def ultrasonic_rule(timestamps, distances, cfg: UltrasonicConfig = UltrasonicConfig()) -> PresenceSeries:
    """Present exactly where the distance lies outside every absence interval."""
    d = np.asarray(distances, dtype=np.float64)
    if not np.all(np.isfinite(d) | np.isinf(d)):
        raise DataError("distances must not be NaN")
    absent = np.zeros(len(d), dtype=bool)
    for a, b in cfg.absence_intervals:
        absent |= (d >= a) & (d <= b)
    return PresenceSeries(np.asarray(timestamps, dtype=np.int64), (~absent).astype(np.int8))


def accel_sigma(samples) -> float:
    """Spread of the acceleration magnitudes sqrt(ax^2+ay^2+az^2), in g.

    Uses the population (1/n) denominator.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 2:
        raise DataError("need at least two (ax, ay, az) samples")
    mags = np.sqrt((arr * arr).sum(axis=1))
    return float(np.std(mags))


def accel_rule(window_starts, sigmas, cfg: AccelConfig = AccelConfig()) -> PresenceSeries:
    """Present where the per-window magnitude spread exceeds theta."""
    s = np.asarray(sigmas, dtype=np.float64)
    states = (s > cfg.theta).astype(np.int8)
    return PresenceSeries(np.asarray(window_starts, dtype=np.int64), states)


def wifi_rule(observation_times, query_times, cfg: WifiConfig = WifiConfig()) -> PresenceSeries:
    """Present at t when some association event lies strictly within delta of t."""
    obs = np.sort(np.asarray(observation_times, dtype=np.int64))
    queries = np.asarray(query_times, dtype=np.int64)
    if len(obs) == 0:
        states = np.zeros(len(queries), dtype=np.int8)
        return PresenceSeries(queries, states)
    pos = np.searchsorted(obs, queries)
    dist = np.full(len(queries), np.inf)
    has_right = pos < len(obs)
    dist[has_right] = np.abs(obs[pos[has_right]] - queries[has_right])
    has_left = pos > 0
    dist[has_left] = np.minimum(dist[has_left], np.abs(queries[has_left] - obs[pos[has_left] - 1]))
    return PresenceSeries(queries, (dist < cfg.delta).astype(np.int8))
