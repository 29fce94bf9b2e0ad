"""Per-window power features.

Five views are computed for every window:

* ``mean_power``: arithmetic mean of the window.
* ``mac``: maximum absolute change between consecutive samples (edge effect).
* ``mad``: mean absolute change between consecutive samples.
* ``mahd``: mean absolute difference between consecutive change points, where
  change points are the local extrema of the window with both endpoints always
  included; plateaus count once, at their first index.
* ``sd``: sample standard deviation (n-1 denominator).

A window of k samples yields k-1 consecutive differences; ``mad`` divides by
that count, so windows never borrow samples from their neighbours.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .trace import PowerTrace, Window, WindowSpec, windowize

VIEW_NAMES = ("mean_power", "mac", "mad", "mahd", "sd")
DEFAULT_VIEWS = ("mean_power", "mac", "mad", "sd")


def _window_array(window) -> np.ndarray:
    x = np.asarray(window, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise DataError("insufficient samples")
    return x


def mac(window) -> float:
    """Maximum absolute change between consecutive samples."""
    x = _window_array(window)
    return float(np.max(np.abs(np.diff(x))))


def mad(window) -> float:
    """Mean absolute change between consecutive samples."""
    x = _window_array(window)
    return float(np.mean(np.abs(np.diff(x))))


def _change_point_values(x: np.ndarray) -> np.ndarray:
    """Values at the window's change points: endpoints plus interior extrema."""
    keep = np.empty(len(x), dtype=bool)
    keep[0] = True
    np.not_equal(x[1:], x[:-1], out=keep[1:])
    xc = x[keep]
    if len(xc) >= 3:
        s = np.sign(np.diff(xc))
        interior = xc[1:-1][s[:-1] != s[1:]]
    else:
        interior = xc[:0]
    return np.concatenate(([x[0]], interior, [x[-1]]))


def mahd(window) -> float:
    """Mean absolute difference between consecutive change points."""
    x = _window_array(window)
    vals = _change_point_values(x)
    return float(np.mean(np.abs(np.diff(vals))))


def sd(window) -> float:
    """Sample standard deviation of the window."""
    x = _window_array(window)
    return float(np.std(x, ddof=1))


def mean_power(window) -> float:
    x = _window_array(window)
    return float(np.mean(x))


@dataclass(frozen=True)
class FeatureVector:
    mean_power: float
    mac: float
    mad: float
    mahd: float
    sd: float


@dataclass(frozen=True)
class FeatureMatrix:
    """One feature row per window, plus the ordered view selection in use."""

    window_starts: np.ndarray         # int64, one per row
    columns: dict                     # view name -> float64 array
    view_selection: tuple[str, ...]
    gap_flags: np.ndarray             # bool, True where the window had missing samples

    def __post_init__(self):
        if len(self.view_selection) < 2:
            raise DataError("at least two views are required")
        for name in self.view_selection:
            if name not in VIEW_NAMES:
                raise DataError(f"unknown view {name!r}")
        n = len(self.window_starts)
        for name in VIEW_NAMES:
            if name not in self.columns or len(self.columns[name]) != n:
                raise DataError("feature columns must cover every window")

    def __len__(self) -> int:
        return len(self.window_starts)

    def view(self, name: str) -> np.ndarray:
        return self.columns[name]

    def row(self, i: int) -> FeatureVector:
        return FeatureVector(**{name: float(self.columns[name][i]) for name in VIEW_NAMES})

    def with_views(self, views: Sequence[str]) -> "FeatureMatrix":
        return FeatureMatrix(
            window_starts=self.window_starts,
            columns=self.columns,
            view_selection=tuple(views),
            gap_flags=self.gap_flags,
        )


def _features_from_windows(windows: list[Window]) -> dict:
    n = len(windows)
    cols = {name: np.empty(n, dtype=np.float64) for name in VIEW_NAMES}
    lengths = {len(w.watts) for w in windows}
    if len(lengths) == 1 and n > 0:
        # Uniform windows: vectorize everything except the extrema scan.
        X = np.vstack([w.watts for w in windows])
        d = np.abs(np.diff(X, axis=1))
        cols["mean_power"][:] = X.mean(axis=1)
        cols["mac"][:] = d.max(axis=1)
        cols["mad"][:] = d.mean(axis=1)
        cols["sd"][:] = X.std(axis=1, ddof=1)
        for i in range(n):
            vals = _change_point_values(X[i])
            cols["mahd"][i] = np.mean(np.abs(np.diff(vals)))
    else:
        for i, w in enumerate(windows):
            x = w.watts
            d = np.abs(np.diff(x))
            cols["mean_power"][i] = x.mean()
            cols["mac"][i] = d.max()
            cols["mad"][i] = d.mean()
            cols["sd"][i] = np.std(x, ddof=1)
            vals = _change_point_values(x)
            cols["mahd"][i] = np.mean(np.abs(np.diff(vals)))
    return cols


def build_views(
    trace: PowerTrace,
    spec: WindowSpec | None = None,
    views: Sequence[str] = DEFAULT_VIEWS,
) -> FeatureMatrix:
    """Windowize a trace and compute all feature columns.

    ``views`` selects which columns participate in classification; the others
    are still computed and exported.
    """
    spec = spec or WindowSpec()
    windows = windowize(trace, spec)
    if not windows:
        raise DataError("trace too short for the requested window width")
    starts = np.array([w.start for w in windows], dtype=np.int64)
    gaps = np.array([w.gap for w in windows], dtype=bool)
    cols = _features_from_windows(windows)
    return FeatureMatrix(
        window_starts=starts,
        columns=cols,
        view_selection=tuple(views),
        gap_flags=gaps,
    )
