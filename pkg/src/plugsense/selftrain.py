"""Zero-training presence inference engine.

The engine starts from an hour-of-day prior labeling, then repeats:

1. fit one KDE classifier per view on the currently labeled windows,
2. relabel every window by cross-view majority vote (prior breaks ties),
3. merge old and new labels: agreements stay, each contested index is kept
   with the sampling rate of the class claiming it, the rest become unlabeled,
4. estimate the labeling noise rate and the classifier error rate from how
   the set sizes moved, via a line search over the error rate where each grid
   point reduces to a small linear solve for the six truth/label counts,
5. compute the stopping metric phi = u_k - u_{k-1} with
   u_k = (labeled count) * (1 - 2 * noise)^2, and stop once phi <= 0.

The labeling retained at the end is the one from the round with the highest
u_k, which guards against late-round degradation even when stopping is off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


from .errors import DataError, DegenerateLabelingError, EstimatorInfeasibleError
from .features import FeatureMatrix
from .kde import classify_batch, fit_view, majority_vote_batch
from .trace import (
    LABEL_ABSENT,
    LABEL_PRESENT,
    UNLABELED,
    LabelPartition,
    PresenceSeries,
    labels_to_states,
)

#: sentinel for a misclassification-rate prior quantity tied to the grid value
MATCH_EPSILON = "epsilon"


@dataclass(frozen=True)
class PriorSchedule:
    """Hour-of-day presence assumption (24 entries, True = present).

    Used only to initialize the labeling and to break majority-vote ties.
    """

    hours: tuple[bool, ...]

    def __post_init__(self):
        if len(self.hours) != 24:
            raise DataError("schedule must define all 24 hours")
        object.__setattr__(self, "hours", tuple(bool(h) for h in self.hours))

    @classmethod
    def default(cls) -> "PriorSchedule":
        """Generic office-hours prior: present 09:00-20:00, absent otherwise."""
        return cls.from_string("9-20")

    @classmethod
    def from_string(cls, text: str) -> "PriorSchedule":
        """Parse either a "9-20" present span (end exclusive, may wrap) or a
        24-character 0/1 string."""
        text = text.strip()
        if len(text) == 24 and set(text) <= {"0", "1"}:
            return cls(tuple(c == "1" for c in text))
        try:
            start_s, end_s = text.split("-")
            start, end = int(start_s), int(end_s)
        except ValueError:
            raise DataError(f"cannot parse schedule {text!r}") from None
        if not (0 <= start <= 24 and 0 <= end <= 24):
            raise DataError("schedule hours must lie in 0..24")
        hours = [False] * 24
        h = start % 24
        while h != end % 24:
            hours[h] = True
            h = (h + 1) % 24
        return cls(tuple(hours))

    def shifted(self, delta_hours: int) -> "PriorSchedule":
        """Rotate the schedule, e.g. +2 turns a 9-20 span into 11-22."""
        return PriorSchedule(tuple(np.roll(np.array(self.hours), delta_hours)))

    def present_at(self, timestamp: int) -> bool:
        return self.hours[(int(timestamp) // 3600) % 24]

    def labels_for(self, timestamps) -> np.ndarray:
        """Class labels (1 present, 2 absent) for each timestamp's hour."""
        ts = np.asarray(timestamps, dtype=np.int64)
        hour = (ts // 3600) % 24
        table = np.where(np.array(self.hours), LABEL_PRESENT, LABEL_ABSENT).astype(np.int8)
        return table[hour]

    def to_string(self) -> str:
        return "".join("1" if h else "0" for h in self.hours)


@dataclass(frozen=True)
class SelfTrainConfig:
    alpha1: float = 0.5
    alpha2: float = 0.5
    max_iter: int = 30
    epsilon_grid_step: float = 0.005
    seed: int = 0
    stop_on_negative_phi: bool = True
    rate_search: bool = False
    sample_unlabeled: bool = True
    epsilon_max: float = 0.5
    retain_labelings: bool = False

    def __post_init__(self):
        if not (0.0 <= self.alpha1 <= 1.0 and 0.0 <= self.alpha2 <= 1.0):
            raise DataError("sampling rates must lie in [0, 1]")
        if self.max_iter < 1:
            raise DataError("max_iter must be >= 1")
        if not (0.0 < self.epsilon_grid_step <= 0.1):
            raise DataError("epsilon_grid_step must lie in (0, 0.1]")
        if not (0.0 < self.epsilon_max <= 1.0):
            raise DataError("epsilon_max must lie in (0, 1]")

    def epsilon_grid(self) -> np.ndarray:
        count = int(round(self.epsilon_max / self.epsilon_grid_step))
        grid = np.arange(count + 1, dtype=np.float64) * self.epsilon_grid_step
        grid[-1] = min(grid[-1], self.epsilon_max)
        return grid


@dataclass(frozen=True)
class PriorQuantities:
    """Exactly two of these three close the count-recovery system:

    * ``class1_total``: number of truly-present windows among all samples,
    * ``type1_rate``: fraction of truly-present labeled windows labeled absent,
    * ``type2_rate``: fraction of truly-absent labeled windows labeled present.

    A rate may be :data:`MATCH_EPSILON`, tying it to the line-search grid
    value (the symmetric-error assumption used when nothing else is known).
    """

    class1_total: float | None = None
    type1_rate: float | str | None = None
    type2_rate: float | str | None = None

    def __post_init__(self):
        provided = [q for q in (self.class1_total, self.type1_rate, self.type2_rate) if q is not None]
        if len(provided) != 2:
            raise DataError("provide exactly two prior quantities")
        for rate in (self.type1_rate, self.type2_rate):
            if rate is None or rate == MATCH_EPSILON:
                continue
            if not (0.0 <= float(rate) <= 1.0):
                raise DataError("error rates must lie in [0, 1]")
        if self.class1_total is not None and self.class1_total < 0:
            raise DataError("class1_total must be >= 0")


@dataclass(frozen=True)
class NoiseEstimate:
    """Recovered counts (a..f) at round k with the matching error/noise rates.

    ``counts_hat`` orders the six counts as (a, b, c, d, e, f): correctly and
    incorrectly labeled present, correctly and incorrectly labeled absent, and
    unlabeled truly-present / truly-absent. ``eta_hat`` is (b+d)/(a+b+c+d).
    ``residual`` is the absolute count residual of the held-out class-2
    growth equation at the selected grid point.
    """

    epsilon_hat: float
    eta_hat: float
    residual: float
    counts_hat: np.ndarray
    sizes_k: tuple[int, int, int]

    def __post_init__(self):
        counts = np.asarray(self.counts_hat, dtype=np.float64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts_hat", counts)


@dataclass(frozen=True)
class IterationRecord:
    """One self-training round: set sizes, estimates, and the stopping metric."""

    iteration: int
    l1: int
    l2: int
    u: int
    eps_hat: float
    eta_hat: float
    u_k: float
    phi: float
    stopped: bool  # stopping indicator fired (phi <= 0) at this round


@dataclass(frozen=True)
class SelfTrainResult:
    series: PresenceSeries
    diagnostics: tuple[IterationRecord, ...]
    best_iteration: int
    stop_reason: str
    final_alpha: tuple[float, float]
    labelings: tuple[np.ndarray, ...] | None = None  # per-round full labelings if retained


def init_from_prior(schedule: PriorSchedule, window_starts) -> LabelPartition:
    """Label every window from the hour-of-day prior; nothing starts unlabeled."""
    starts = np.asarray(window_starts, dtype=np.int64)
    if len(starts) == 0:
        raise DataError("empty input")
    return LabelPartition.from_labels(schedule.labels_for(starts))


def update_labels(
    prev: LabelPartition,
    new: LabelPartition,
    cfg: SelfTrainConfig,
    rng: np.random.Generator,
) -> LabelPartition:
    """Merge the previous labeling with this round's relabeling.

    Indices with unchanged labels are kept. A contested index is claimed by
    its new label when it has one (otherwise by its old label) and survives
    with that class's sampling rate; unclaimed indices become unlabeled. With
    ``sample_unlabeled`` off, previously unlabeled indices stay unlabeled.
    """
    if prev.n_total != new.n_total:
        raise DataError("index-set mismatch")
    old = prev.labels()
    nw = new.labels()
    out = old.copy()
    contested = old != nw
    if not cfg.sample_unlabeled:
        contested &= ~((old == UNLABELED) & (nw != UNLABELED))
    idx = np.flatnonzero(contested)
    if len(idx):
        claim = np.where(nw[idx] != UNLABELED, nw[idx], old[idx])
        rates = np.where(claim == LABEL_PRESENT, cfg.alpha1, cfg.alpha2)
        keep = rng.random(len(idx)) < rates
        out[idx] = np.where(keep, claim, UNLABELED)
    return LabelPartition.from_labels(out)


def forward_counts(counts, epsilon: float, alpha1: float, alpha2: float) -> np.ndarray:
    """Expected next-round counts (a, b, c, d, e, f) given the current ones.

    Samples keep an agreeing label outright and survive a contested relabel
    with the claiming class's sampling rate; truth totals are conserved.
    """
    a, b, c, d, e, f = np.asarray(counts, dtype=np.float64)
    a_next = a * (1 - epsilon) + (d + e) * (1 - epsilon) * alpha1
    b_next = b * epsilon + (c + f) * epsilon * alpha1
    c_next = c * (1 - epsilon) + (b + f) * (1 - epsilon) * alpha2
    d_next = d * epsilon + (a + e) * epsilon * alpha2
    e_next = (a + d + e) - a_next - d_next
    f_next = (b + c + f) - b_next - c_next
    return np.array([a_next, b_next, c_next, d_next, e_next, f_next])


def _growth_rows(epsilon, alpha1, alpha2, m1, m2, uu, m1_next, m2_next):
    """Linear forms of the class growth equations in the free unknowns (a, c, e),
    after substituting b = m1 - a, d = m2 - c, f = uu - e."""
    s = 1.0 - 2.0 * epsilon
    row1 = (
        np.array([s, -alpha1 * s, alpha1 * s]),
        m1_next - epsilon * m1 - (1 - epsilon) * alpha1 * m2 - epsilon * alpha1 * uu,
    )
    row2 = (
        np.array([-alpha2 * s, s, -alpha2 * s]),
        m2_next - (1 - epsilon) * alpha2 * m1 - epsilon * m2 - (1 - epsilon) * alpha2 * uu,
    )
    return row1, row2


def _prior_rows(q: PriorQuantities, epsilon, m1, m2, skip_class_total=False):
    rows = []
    if q.class1_total is not None and not skip_class_total:
        rows.append((np.array([1.0, -1.0, 1.0]), float(q.class1_total) - m2))
    if q.type1_rate is not None:
        r1 = epsilon if q.type1_rate == MATCH_EPSILON else float(q.type1_rate)
        rows.append((np.array([-r1, -(1.0 - r1), 0.0]), -(1.0 - r1) * m2))
    if q.type2_rate is not None:
        r2 = epsilon if q.type2_rate == MATCH_EPSILON else float(q.type2_rate)
        rows.append((np.array([-(1.0 - r2), -r2, 0.0]), -(1.0 - r2) * m1))
    return rows


def estimate_noise(
    sizes_k: Sequence[int],
    sizes_k1: Sequence[int],
    cfg: SelfTrainConfig,
    prior_quantities: PriorQuantities,
) -> NoiseEstimate:
    """Recover the round-k counts and rates from observed set sizes.

    For each candidate error rate on the grid the constraint system becomes
    linear in (a, c, e). The observed sums (by construction) and the two
    prior quantities are hard constraints; the class-1 growth equation then
    pins the remaining freedom exactly when it can (the generic case) and in
    box-bounded least squares otherwise, e.g. when an empty unlabeled set
    removes a degree of freedom. Candidates are ranked by the combined
    absolute residual of both growth equations, which in the generic case is
    just the held-out class-2 equation's residual; ties go to the smaller
    rate. Raises :class:`EstimatorInfeasibleError` when no grid point admits
    nonnegative counts under the hard constraints.
    """
    m1, m2, uu = (float(v) for v in sizes_k)
    m1n, m2n, un = (float(v) for v in sizes_k1)
    if min(m1, m2, uu, m1n, m2n, un) < 0:
        raise DataError("set sizes must be nonnegative")
    n_total = m1 + m2 + uu
    if abs(n_total - (m1n + m2n + un)) > 1e-9 * max(1.0, n_total):
        raise DataError("set sizes at consecutive rounds must cover the same samples")
    if m1 + m2 <= 0:
        raise DataError("no labeled samples")

    scale = max(1.0, n_total)
    box_tol = 1e-7 * scale
    hard_tol = 1e-6 * scale
    box_hi = np.array([m1, m2, uu])

    # With no unlabeled mass, e is already known to be zero, which stands in
    # for one prior quantity; keeping the class-1 total too would overdetermine
    # the hard system (and at round 0 it merely restates the prior labeling).
    skip_class_total = (
        uu == 0
        and prior_quantities.class1_total is not None
        and (prior_quantities.type1_rate is not None or prior_quantities.type2_rate is not None)
    )

    best = None  # (score, epsilon, counts, held-out residual)
    for epsilon in cfg.epsilon_grid():
        grow1, grow2 = _growth_rows(epsilon, cfg.alpha1, cfg.alpha2, m1, m2, uu, m1n, m2n)
        hard = _prior_rows(prior_quantities, epsilon, m1, m2, skip_class_total)
        x = _solve_boxed(hard, grow1, box_hi, box_tol, hard_tol)
        if x is None:
            continue
        res1 = abs(float(grow1[0] @ x) - grow1[1])
        res2 = abs(float(grow2[0] @ x) - grow2[1])
        score = res1 + res2
        if best is None or score < best[0] - 1e-15:
            best = (score, float(epsilon), x, res2)
    if best is None:
        raise EstimatorInfeasibleError("estimator infeasible: no nonnegative count solution on the grid")

    _, eps_hat, x, residual = best
    a, c, e = (float(np.clip(x[i], 0.0, box_hi[i])) for i in range(3))
    counts = np.array([a, m1 - a, c, m2 - c, e, uu - e])
    eta_hat = (counts[1] + counts[3]) / (m1 + m2)
    return NoiseEstimate(
        epsilon_hat=eps_hat,
        eta_hat=float(eta_hat),
        residual=residual,
        counts_hat=counts,
        sizes_k=(int(m1), int(m2), int(uu)),
    )


def _solve_boxed(hard_rows, soft_row, box_hi, box_tol, hard_tol):
    """Fit the hard rows exactly and the soft row as well as possible, under
    0 <= x <= box_hi. Returns None when the hard rows cannot be satisfied.

    The hard constraints leave at most one degree of freedom, so the feasible
    set is a point or a segment; the soft row is affine along it, which makes
    the minimizer a clamped root.
    """
    free = box_hi > 0
    x = np.zeros(3)
    H = np.vstack([r[0] for r in hard_rows])[:, free]
    b_h = np.array([r[1] for r in hard_rows])

    if not free.any():
        return x if np.max(np.abs(b_h)) <= hard_tol else None

    xp, *_ = np.linalg.lstsq(H, b_h, rcond=None)
    if not np.all(np.isfinite(xp)) or np.linalg.norm(H @ xp - b_h) > hard_tol:
        return None

    n_free = int(free.sum())
    if H.shape[0] >= n_free:
        if np.any(xp < -box_tol) or np.any(xp > box_hi[free] + box_tol):
            return None
        x[free] = np.clip(xp, 0.0, box_hi[free])
        return x

    # One degree of freedom: x = xp + t * v with v spanning the null space.
    if n_free == 2:
        v = np.array([-H[0, 1], H[0, 0]])
    else:
        v = np.cross(H[0], H[1])
    vnorm = np.linalg.norm(v)
    if vnorm < 1e-12 * max(1.0, np.abs(H).max()):
        # Degenerate hard rows; fall back to the min-norm point.
        if np.any(xp < -box_tol) or np.any(xp > box_hi[free] + box_tol):
            return None
        x[free] = np.clip(xp, 0.0, box_hi[free])
        return x
    v = v / vnorm

    t_lo, t_hi = -np.inf, np.inf
    hi_free = box_hi[free]
    for i in range(n_free):
        if abs(v[i]) < 1e-15:
            if xp[i] < -box_tol or xp[i] > hi_free[i] + box_tol:
                return None
            continue
        bounds = sorted(((-box_tol - xp[i]) / v[i], (hi_free[i] + box_tol - xp[i]) / v[i]))
        t_lo = max(t_lo, bounds[0])
        t_hi = min(t_hi, bounds[1])
    if t_lo > t_hi:
        return None

    c_soft = np.asarray(soft_row[0])[free]
    slope = float(c_soft @ v)
    offset = float(c_soft @ xp) - soft_row[1]
    t_star = -offset / slope if abs(slope) > 1e-15 else 0.0
    t_star = min(max(t_star, t_lo), t_hi)
    x[free] = np.clip(xp + t_star * v, 0.0, hi_free)
    return x


def stopping_metric(m_prev: float, eta_prev: float, m_cur: float, eta_cur: float) -> float:
    """phi = m_cur * (1 - 2*eta_cur)^2 - m_prev * (1 - 2*eta_prev)^2.

    Positive phi certifies (with high probability) that the labeled set got
    more informative; nonpositive phi withdraws the improvement guarantee.
    """
    if m_prev < 0 or m_cur < 0:
        raise DataError("labeled counts must be nonnegative")
    return m_cur * (1.0 - 2.0 * eta_cur) ** 2 - m_prev * (1.0 - 2.0 * eta_prev) ** 2


def search_rates(
    estimate: NoiseEstimate,
    u_current: float,
    current_alpha: tuple[float, float],
) -> tuple[float, float] | None:
    """Scan sampling-rate pairs for one predicted to push the metric back up.

    Candidates are the incumbent pair followed by the 0.1-step grid over
    [0, 1]^2; each is evaluated by rolling the recovered counts forward one
    round at the estimated error rate. Returns the first pair whose predicted
    next u exceeds ``u_current``, or None (a chance-level classifier can never
    qualify, since relabeling by coin flip cannot concentrate the labels).
    """
    if estimate.epsilon_hat >= 0.5 - 1e-12:
        return None
    grid = [tuple(current_alpha)] + [
        (round(i * 0.1, 1), round(j * 0.1, 1)) for i in range(11) for j in range(11)
    ]
    for a1, a2 in grid:
        nxt = forward_counts(estimate.counts_hat, estimate.epsilon_hat, a1, a2)
        m_next = nxt[0] + nxt[1] + nxt[2] + nxt[3]
        if m_next <= 0:
            continue
        eta_next = (nxt[1] + nxt[3]) / m_next
        u_next = m_next * (1.0 - 2.0 * eta_next) ** 2
        if u_next - u_current > 0:
            return (a1, a2)
    return None


def run_self_training(
    features: FeatureMatrix,
    schedule: PriorSchedule,
    cfg: SelfTrainConfig,
) -> SelfTrainResult:
    """Run the full train/vote/resample/estimate loop on a feature matrix.

    Deterministic for a fixed config seed. The returned series carries the
    labeling of the round with the highest u_k; windows that round left
    unlabeled take that round's majority-vote label.
    """
    selection = features.view_selection
    if len(selection) < 2:
        raise DataError("at least two views are required")
    starts = features.window_starts
    n = len(starts)
    if n == 0:
        raise DataError("empty input")

    prior_labels = schedule.labels_for(starts)
    priors = PriorQuantities(
        class1_total=int(np.sum(prior_labels == LABEL_PRESENT)),
        type1_rate=MATCH_EPSILON,
    )
    labels = LabelPartition.from_labels(prior_labels)
    rng = np.random.default_rng(cfg.seed)
    alpha = (cfg.alpha1, cfg.alpha2)

    rows: list[IterationRecord] = []
    retained: list[np.ndarray] | None = [] if cfg.retain_labelings else None
    u_prev = 0.0  # the initial labeling is treated as maximally noisy
    best_u = -math.inf
    best_iteration = -1
    best_labeling = prior_labels
    stop_reason = "max_iter"

    for k in range(cfg.max_iter):
        current = labels.labels()
        if not (current == LABEL_PRESENT).any() or not (current == LABEL_ABSENT).any():
            raise DegenerateLabelingError(
                f"degenerate labeling at round {k}: a class has no labeled samples", rows
            )
        votes = np.empty((n, len(selection)), dtype=np.int8)
        for j, view in enumerate(selection):
            clf = fit_view(features.view(view), labels, view)
            votes[:, j] = classify_batch(clf, features.view(view))
        vote_labels = majority_vote_batch(votes, prior_labels)
        full_labeling = np.where(current != UNLABELED, current, vote_labels)

        vote_partition = LabelPartition.from_labels(vote_labels)
        round_cfg = replace(cfg, alpha1=alpha[0], alpha2=alpha[1])
        proposed = update_labels(labels, vote_partition, round_cfg, rng)

        try:
            est = estimate_noise(labels.sizes, proposed.sizes, cfg, priors)
        except EstimatorInfeasibleError:
            stop_reason = "estimator_infeasible"
            break

        m_k = labels.sizes[0] + labels.sizes[1]
        u_k = m_k * (1.0 - 2.0 * est.eta_hat) ** 2
        phi = u_k - u_prev
        fired = phi <= 0
        rows.append(
            IterationRecord(
                iteration=k,
                l1=labels.sizes[0],
                l2=labels.sizes[1],
                u=labels.sizes[2],
                eps_hat=est.epsilon_hat,
                eta_hat=est.eta_hat,
                u_k=u_k,
                phi=phi,
                stopped=fired,
            )
        )
        if retained is not None:
            retained.append(full_labeling)
        if u_k > best_u:
            best_u = u_k
            best_iteration = k
            best_labeling = full_labeling

        if fired and cfg.stop_on_negative_phi:
            rescued = False
            if cfg.rate_search:
                pair = search_rates(est, u_k, alpha)
                if pair is not None:
                    alpha = pair
                    round_cfg = replace(cfg, alpha1=alpha[0], alpha2=alpha[1])
                    proposed = update_labels(labels, vote_partition, round_cfg, rng)
                    rescued = True
            if not rescued:
                stop_reason = "stopping_metric"
                break

        labels = proposed
        u_prev = u_k

    series = PresenceSeries(starts, labels_to_states(best_labeling))
    return SelfTrainResult(
        series=series,
        diagnostics=tuple(rows),
        best_iteration=best_iteration,
        stop_reason=stop_reason,
        final_alpha=alpha,
        labelings=tuple(retained) if retained is not None else None,
    )
