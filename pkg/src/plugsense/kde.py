"""Per-view generative classifier: class-conditional Gaussian KDE + Bayes rule.

Each view gets one classifier holding class priors, the training feature
values per class, and one Gaussian-kernel bandwidth per class. Densities are
always compared in log space so extreme feature values cannot underflow a
decision. Cross-view aggregation is a majority vote whose even-split ties are
resolved by a caller-supplied prior label.

For large fit/score products the scorer switches to a linear-binned FFT
evaluation of the KDE (bin width a small fraction of the bandwidth, so the
approximation error is far below decision relevance); queries that fall
outside the resolvable density range are re-scored exactly in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import logsumexp

from .errors import DataError, DegenerateLabelingError
from .trace import LABEL_ABSENT, LABEL_PRESENT, LabelPartition

SQRT_2PI = math.sqrt(2.0 * math.pi)
BANDWIDTH_FLOOR = 1e-3
# Above this n_train * n_query product the batch scorer uses the binned path.
_EXACT_PRODUCT_LIMIT = 2_000_000
_BINS = 1 << 14


def kde_density(samples, h: float, x):
    """Gaussian kernel density estimate at ``x`` (scalar or array).

    density(x) = (1/n) * sum_i (1 / (h * sqrt(2*pi))) * exp(-(x - x_i)^2 / (2 h^2))
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or len(samples) == 0:
        raise DataError("empty class")
    if not np.isfinite(h) or h <= 0:
        raise DataError("invalid bandwidth")
    xs = np.asarray(x, dtype=np.float64)
    u = (xs[..., None] - samples) / h
    dens = np.exp(-0.5 * u * u).sum(axis=-1) / (len(samples) * h * SQRT_2PI)
    return float(dens) if np.isscalar(x) or xs.ndim == 0 else dens


def log_kde_density(samples, h: float, x):
    """log of ``kde_density``, computed stably via logsumexp."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or len(samples) == 0:
        raise DataError("empty class")
    if not np.isfinite(h) or h <= 0:
        raise DataError("invalid bandwidth")
    xs = np.asarray(x, dtype=np.float64)
    u = (xs[..., None] - samples) / h
    out = logsumexp(-0.5 * u * u, axis=-1) - math.log(len(samples) * h * SQRT_2PI)
    return float(out) if np.isscalar(x) or xs.ndim == 0 else out


def _floor_bandwidth(samples: np.ndarray) -> float:
    return max(BANDWIDTH_FLOOR, 0.01 * max(1.0, float(np.mean(samples))))


def select_bandwidth(samples) -> float:
    """Rule-of-thumb bandwidth 1.06 * sigma * n^(-1/5), with a positive floor.

    Constant samples (sigma = 0) get a small floor bandwidth instead of a
    degenerate zero, which matters for flat absence-period features.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or len(samples) < 2:
        raise DataError("need at least two samples to select a bandwidth")
    sigma = float(np.std(samples, ddof=1))
    if sigma > 0:
        return 1.06 * sigma * len(samples) ** (-0.2)
    return _floor_bandwidth(samples)


@dataclass(frozen=True)
class ViewClassifier:
    """Immutable fitted model for one view: priors + per-class KDE."""

    view: str
    priors: tuple[float, float]          # p(class 1), p(class 2)
    samples1: np.ndarray
    samples2: np.ndarray
    h1: float
    h2: float

    def __post_init__(self):
        s1 = np.asarray(self.samples1, dtype=np.float64)
        s2 = np.asarray(self.samples2, dtype=np.float64)
        s1.setflags(write=False)
        s2.setflags(write=False)
        object.__setattr__(self, "samples1", s1)
        object.__setattr__(self, "samples2", s2)
        if len(s1) == 0 or len(s2) == 0:
            raise DataError("each class needs at least one training sample")
        if not (self.h1 > 0 and self.h2 > 0 and np.isfinite(self.h1) and np.isfinite(self.h2)):
            raise DataError("invalid bandwidth")
        if abs(self.priors[0] + self.priors[1] - 1.0) > 1e-9:
            raise DataError("class priors must sum to 1")

    def to_diagnostics(self) -> dict:
        """JSON-ready summary (no raw samples)."""
        return {
            "view": self.view,
            "priors": [self.priors[0], self.priors[1]],
            "bandwidths": [self.h1, self.h2],
            "sample_counts": [int(len(self.samples1)), int(len(self.samples2))],
        }


def fit_view(values, labels: LabelPartition, view: str = "") -> ViewClassifier:
    """Fit one view's classifier from the currently labeled indices.

    Unlabeled indices are ignored. Priors are the labeled-set proportions.
    """
    values = np.asarray(values, dtype=np.float64)
    if len(values) != labels.n_total:
        raise DataError("feature values must cover every window")
    n1, n2 = len(labels.l1), len(labels.l2)
    if n1 == 0 or n2 == 0:
        raise DegenerateLabelingError("degenerate labeling: a class has no labeled samples")
    s1 = values[labels.l1]
    s2 = values[labels.l2]
    h1 = select_bandwidth(s1) if n1 >= 2 else _floor_bandwidth(s1)
    h2 = select_bandwidth(s2) if n2 >= 2 else _floor_bandwidth(s2)
    total = n1 + n2
    return ViewClassifier(
        view=view,
        priors=(n1 / total, n2 / total),
        samples1=s1,
        samples2=s2,
        h1=h1,
        h2=h2,
    )


def _log_density_exact(samples: np.ndarray, h: float, xs: np.ndarray) -> np.ndarray:
    out = np.empty(len(xs), dtype=np.float64)
    norm = math.log(len(samples) * h * SQRT_2PI)
    chunk = max(1, _EXACT_PRODUCT_LIMIT // max(1, len(samples)))
    for lo in range(0, len(xs), chunk):
        u = (xs[lo:lo + chunk, None] - samples) / h
        z = -0.5 * u * u
        zmax = z.max(axis=1)
        out[lo:lo + chunk] = zmax + np.log(np.exp(z - zmax[:, None]).sum(axis=1)) - norm
    return out


def _log_density_tail(sorted_samples: np.ndarray, h: float, xs: np.ndarray) -> np.ndarray:
    """Deep-tail log density via the dominant (nearest) kernel.

    Valid where the density underflowed the binned evaluation: the neglected
    non-dominant kernels contribute at most log(n), which is noise at that
    depth. Keeps far-out queries comparable across classes in log space.
    """
    n = len(sorted_samples)
    pos = np.searchsorted(sorted_samples, xs)
    left = sorted_samples[np.clip(pos - 1, 0, n - 1)]
    right = sorted_samples[np.clip(pos, 0, n - 1)]
    d = np.minimum(np.abs(xs - left), np.abs(right - xs))
    return -0.5 * (d / h) ** 2 - math.log(n * h * SQRT_2PI)


_FALLBACK_BUDGET = 20_000_000


def _log_density_binned(samples: np.ndarray, h: float, xs: np.ndarray) -> np.ndarray:
    lo = min(samples.min(), xs.min())
    hi = max(samples.max(), xs.max())
    if hi - lo <= 0 or (hi - lo) < 1e-9 * h:
        return _log_density_exact(samples, h, xs)
    grid = np.linspace(lo, hi, _BINS)
    dx = grid[1] - grid[0]
    # Linear binning of the training mass.
    pos = (samples - lo) / dx
    i0 = np.clip(pos.astype(np.int64), 0, _BINS - 2)
    w1 = pos - i0
    weights = np.zeros(_BINS, dtype=np.float64)
    np.add.at(weights, i0, 1.0 - w1)
    np.add.at(weights, i0 + 1, w1)
    half = min(_BINS - 1, int(math.ceil(38.0 * h / dx)))  # cover down to float tininess
    ku = np.arange(-half, half + 1, dtype=np.float64) * dx / h
    kern = np.exp(-0.5 * ku * ku)
    if half <= 1024:
        # Direct convolution keeps tail errors local (true zeros stay zero);
        # FFT would smear an eps * total-mass noise floor across the grid.
        dens_grid = np.convolve(weights, kern, mode="same")
    else:
        dens_grid = fftconvolve(weights, kern, mode="same")
    np.maximum(dens_grid, 0.0, out=dens_grid)
    dens_grid /= len(samples) * h * SQRT_2PI
    dens = np.interp(xs, grid, dens_grid)
    out = np.full(len(xs), -np.inf, dtype=np.float64)
    # Values below the FFT noise floor are not trustworthy; re-derive them.
    ok = dens > 3e-13 / (h * SQRT_2PI)
    np.log(dens, out=out, where=ok)
    bad = ~ok
    if bad.any():
        n_bad = int(bad.sum())
        if n_bad * len(samples) <= _FALLBACK_BUDGET:
            out[bad] = _log_density_exact(samples, h, xs[bad])
        else:
            out[bad] = _log_density_tail(np.sort(samples), h, xs[bad])
    return out


def _log_density_batch(samples: np.ndarray, h: float, xs: np.ndarray) -> np.ndarray:
    if len(samples) * len(xs) <= _EXACT_PRODUCT_LIMIT:
        return _log_density_exact(samples, h, xs)
    return _log_density_binned(samples, h, xs)


def log_scores(clf: ViewClassifier, xs) -> tuple[np.ndarray, np.ndarray]:
    """Per-class log posterior scores (up to a shared constant) for a batch."""
    xs = np.ascontiguousarray(np.asarray(xs, dtype=np.float64))
    s1 = math.log(clf.priors[0]) + _log_density_batch(clf.samples1, clf.h1, xs) \
        if clf.priors[0] > 0 else np.full(len(xs), -np.inf)
    s2 = math.log(clf.priors[1]) + _log_density_batch(clf.samples2, clf.h2, xs) \
        if clf.priors[1] > 0 else np.full(len(xs), -np.inf)
    return s1, s2


def classify(clf: ViewClassifier, x: float) -> int:
    """Bayes decision for one value; exact ties go to class 1 (present)."""
    s1 = math.log(clf.priors[0]) + log_kde_density(clf.samples1, clf.h1, x) \
        if clf.priors[0] > 0 else -math.inf
    s2 = math.log(clf.priors[1]) + log_kde_density(clf.samples2, clf.h2, x) \
        if clf.priors[1] > 0 else -math.inf
    return LABEL_PRESENT if s1 >= s2 else LABEL_ABSENT


def classify_batch(clf: ViewClassifier, xs) -> np.ndarray:
    """Vectorized Bayes decisions; ties go to class 1 as in ``classify``."""
    s1, s2 = log_scores(clf, xs)
    return np.where(s1 >= s2, LABEL_PRESENT, LABEL_ABSENT).astype(np.int8)


def majority_vote(view_labels, prior_label: int) -> int:
    """Median vote over per-view labels; an even split falls back to the prior."""
    labels = np.asarray(view_labels)
    if labels.ndim != 1 or len(labels) == 0:
        raise DataError("need at least one view label")
    if np.any((labels != LABEL_PRESENT) & (labels != LABEL_ABSENT)):
        raise DataError("view labels must be 1 or 2")
    ones = int(np.sum(labels == LABEL_PRESENT))
    twos = len(labels) - ones
    if ones > twos:
        return LABEL_PRESENT
    if twos > ones:
        return LABEL_ABSENT
    return int(prior_label)


def majority_vote_batch(view_labels: np.ndarray, prior_labels: np.ndarray) -> np.ndarray:
    """Row-wise majority vote. ``view_labels`` is (n_samples, n_views)."""
    ones = (view_labels == LABEL_PRESENT).sum(axis=1)
    twos = view_labels.shape[1] - ones
    out = np.where(ones > twos, LABEL_PRESENT, LABEL_ABSENT).astype(np.int8)
    ties = ones == twos
    out[ties] = prior_labels[ties]
    return out
