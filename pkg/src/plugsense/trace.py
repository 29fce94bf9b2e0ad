"""Core time-series data model: power traces, windows, presence series, labelings.

Timestamps are integer epoch seconds throughout (sub-second input is truncated
on ingest). All types are immutable after construction and safe to share.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

PRESENT = 1
ABSENT = 0

LABEL_PRESENT = 1  # class y1
LABEL_ABSENT = 2   # class y2
UNLABELED = 0


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr = np.array(arr, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PowerTrace:
    """One user's plug-load power signal sampled at ``nominal_period`` seconds."""

    user_id: str
    timestamps: np.ndarray  # int64 epoch seconds, strictly increasing
    watts: np.ndarray       # float64, finite, >= 0
    nominal_period: int = 1

    def __post_init__(self):
        ts = _frozen_array(self.timestamps, np.int64)
        pw = _frozen_array(self.watts, np.float64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "watts", pw)
        if ts.ndim != 1 or pw.ndim != 1 or len(ts) != len(pw):
            raise DataError("timestamps and watts must be 1-D arrays of equal length")
        if len(ts) == 0:
            raise DataError("empty input")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise DataError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(pw)) or np.any(pw < 0):
            raise DataError("power values must be finite and >= 0")
        if self.nominal_period < 1:
            raise DataError("nominal_period must be >= 1 second")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def span_seconds(self) -> int:
        """Covered duration, counting the last sample's full period."""
        return int(self.timestamps[-1] - self.timestamps[0]) + self.nominal_period


@dataclass(frozen=True)
class WindowSpec:
    """Aggregation window: ``width`` seconds every ``stride`` seconds.

    ``stride`` defaults to ``width`` (non-overlapping windows).
    """

    width: int = 60
    stride: int | None = None

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, "stride", self.width)
        if self.width <= 0 or self.stride <= 0:
            raise DataError("window width and stride must be positive")


@dataclass(frozen=True)
class Window:
    """Samples falling in [start, start + width); ``gap`` marks missing samples."""

    start: int
    watts: np.ndarray
    expected_samples: int

    def __post_init__(self):
        object.__setattr__(self, "watts", _frozen_array(self.watts, np.float64))

    @property
    def gap(self) -> bool:
        return len(self.watts) < self.expected_samples


def windowize(trace: PowerTrace, spec: WindowSpec) -> list[Window]:
    """Split a trace into windows of ``spec.width`` seconds.

    Windows are anchored at the first sample. A trailing window that would
    extend past the trace span is dropped; windows holding fewer than two
    samples (gaps) are dropped as well, since every feature needs at least
    one first difference.
    """
    period = trace.nominal_period
    if spec.width < 2 * period:
        raise DataError("window too small")
    if spec.width % period != 0:
        raise DataError("window width must be an integer multiple of the sample period")
    t0 = int(trace.timestamps[0])
    span = trace.span_seconds
    if span < spec.width:
        return []
    n_windows = (span - spec.width) // spec.stride + 1
    expected = spec.width // period
    out: list[Window] = []
    ts = trace.timestamps
    for j in range(n_windows):
        start = t0 + j * spec.stride
        lo = np.searchsorted(ts, start, side="left")
        hi = np.searchsorted(ts, start + spec.width, side="left")
        if hi - lo >= 2:
            out.append(Window(start=start, watts=trace.watts[lo:hi], expected_samples=expected))
    return out


@dataclass(frozen=True)
class PresenceSeries:
    """Binary presence state (1 present, 0 absent) per window start."""

    window_starts: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        starts = _frozen_array(self.window_starts, np.int64)
        states = _frozen_array(self.states, np.int8)
        object.__setattr__(self, "window_starts", starts)
        object.__setattr__(self, "states", states)
        if len(starts) != len(states):
            raise DataError("window_starts and states must have equal length")
        if len(starts) > 1 and not np.all(np.diff(starts) > 0):
            raise DataError("window_starts must be strictly increasing")
        if len(states) and not np.all((states == PRESENT) | (states == ABSENT)):
            raise DataError("states must be binary (0 absent, 1 present)")

    def __len__(self) -> int:
        return len(self.states)


def labels_to_states(labels: np.ndarray) -> np.ndarray:
    """Map class labels (1 present, 2 absent) to presence states (1/0)."""
    labels = np.asarray(labels)
    if np.any((labels != LABEL_PRESENT) & (labels != LABEL_ABSENT)):
        raise DataError("labels must be 1 (present) or 2 (absent)")
    return (labels == LABEL_PRESENT).astype(np.int8)


def states_to_labels(states: np.ndarray) -> np.ndarray:
    """Map presence states (1/0) to class labels (1 present, 2 absent)."""
    states = np.asarray(states)
    return np.where(states == PRESENT, LABEL_PRESENT, LABEL_ABSENT).astype(np.int8)


@dataclass(frozen=True)
class LabelPartition:
    """Disjoint index sets over ``n_total`` windows: present / absent / unlabeled."""

    l1: np.ndarray  # indices labeled present (class 1)
    l2: np.ndarray  # indices labeled absent (class 2)
    u: np.ndarray   # unlabeled indices
    n_total: int

    def __post_init__(self):
        l1 = _frozen_array(np.sort(np.asarray(self.l1, dtype=np.int64)), np.int64)
        l2 = _frozen_array(np.sort(np.asarray(self.l2, dtype=np.int64)), np.int64)
        u = _frozen_array(np.sort(np.asarray(self.u, dtype=np.int64)), np.int64)
        object.__setattr__(self, "l1", l1)
        object.__setattr__(self, "l2", l2)
        object.__setattr__(self, "u", u)
        combined = np.concatenate([l1, l2, u])
        combined.sort()
        if len(combined) != self.n_total or not np.array_equal(
            combined, np.arange(self.n_total, dtype=np.int64)
        ):
            raise DataError("label sets must be disjoint and cover 0..n_total-1")

    @classmethod
    def from_labels(cls, labels: Iterable[int]) -> "LabelPartition":
        """Build from a per-index array with values 1 (present), 2 (absent), 0 (unlabeled)."""
        arr = np.asarray(labels, dtype=np.int8)
        if arr.ndim != 1:
            raise DataError("labels must be a 1-D array")
        if np.any((arr < 0) | (arr > 2)):
            raise DataError("labels must be 0, 1, or 2")
        idx = np.arange(len(arr), dtype=np.int64)
        return cls(
            l1=idx[arr == LABEL_PRESENT],
            l2=idx[arr == LABEL_ABSENT],
            u=idx[arr == UNLABELED],
            n_total=len(arr),
        )

    def labels(self) -> np.ndarray:
        """Per-index label array: 1 present, 2 absent, 0 unlabeled."""
        out = np.zeros(self.n_total, dtype=np.int8)
        out[self.l1] = LABEL_PRESENT
        out[self.l2] = LABEL_ABSENT
        return out

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (len(self.l1), len(self.l2), len(self.u))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelPartition):
            return NotImplemented
        return (
            self.n_total == other.n_total
            and np.array_equal(self.l1, other.l1)
            and np.array_equal(self.l2, other.l2)
            and np.array_equal(self.u, other.u)
        )

    __hash__ = None
