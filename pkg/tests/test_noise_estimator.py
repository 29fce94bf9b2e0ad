import numpy as np
import pytest

from plugsense.errors import DataError, EstimatorInfeasibleError
from plugsense.selftrain import (
    MATCH_EPSILON,
    NoiseEstimate,
    PriorQuantities,
    SelfTrainConfig,
    estimate_noise,
    forward_counts,
    search_rates,
)


def sizes_of(counts):
    a, b, c, d, e, f = counts
    return (a + b, c + d, e + f)


def make_counts(rng, n=10_000, eta0=None, u_frac=None):
    """Random count vector with a prescribed labeling noise rate."""
    eta0 = rng.uniform(0.05, 0.45) if eta0 is None else eta0
    u_frac = rng.uniform(0.0, 0.3) if u_frac is None else u_frac
    u0 = u_frac * n
    labeled = n - u0
    m1 = rng.uniform(0.3, 0.6) * labeled
    m2 = labeled - m1
    wrong = eta0 * labeled
    b = min(wrong * rng.uniform(0.3, 0.7), 0.9 * m1)
    d = min(wrong - b, 0.9 * m2)
    b = wrong - d
    e = rng.uniform(0.2, 0.8) * u0
    return np.array([m1 - b, b, m2 - d, d, e, u0 - e])


def test_forward_counts_hand_computed():
    counts = np.array([10.0, 2.0, 8.0, 3.0, 5.0, 4.0])
    nxt = forward_counts(counts, epsilon=0.1, alpha1=0.5, alpha2=0.25)
    assert nxt == pytest.approx([12.6, 0.8, 8.55, 0.675, 4.725, 4.65])
    assert nxt.sum() == pytest.approx(counts.sum())


def test_forward_counts_conserves_truth_totals():
    rng = np.random.default_rng(0)
    for _ in range(20):
        counts = make_counts(rng)
        nxt = forward_counts(counts, rng.uniform(0, 0.5), rng.random(), rng.random())
        assert nxt[0] + nxt[3] + nxt[4] == pytest.approx(counts[0] + counts[3] + counts[4])
        assert nxt[1] + nxt[2] + nxt[5] == pytest.approx(counts[1] + counts[2] + counts[5])
        assert np.all(nxt >= -1e-9)


def _estimate(counts, eps, a1, a2, quantities=None):
    cfg = SelfTrainConfig(alpha1=a1, alpha2=a2)
    nxt = forward_counts(counts, eps, a1, a2)
    if quantities is None:
        a, _, _, d, e, _ = counts
        quantities = PriorQuantities(class1_total=a + d + e, type1_rate=d / (a + d))
    return estimate_noise(sizes_of(counts), sizes_of(nxt), cfg, quantities)


def test_perfect_classifier_recovered_exactly():
    rng = np.random.default_rng(1)
    counts = make_counts(rng, eta0=0.2)
    est = _estimate(counts, eps=0.0, a1=0.5, a2=0.5)
    assert est.epsilon_hat == 0.0
    assert est.residual <= 1e-6
    assert est.counts_hat == pytest.approx(counts, abs=1e-5)


def test_known_epsilon_recovered_within_grid_step():
    rng = np.random.default_rng(2)
    counts = make_counts(rng, eta0=0.2)
    est = _estimate(counts, eps=0.10, a1=0.6, a2=0.4)
    assert abs(est.epsilon_hat - 0.10) <= 0.005 + 1e-12
    assert est.residual < 1e-6 * counts.sum()


def test_eta_hat_is_count_identity():
    rng = np.random.default_rng(3)
    counts = make_counts(rng)
    est = _estimate(counts, eps=0.05, a1=0.5, a2=0.5)
    a, b, c, d, _, _ = est.counts_hat
    assert est.eta_hat == pytest.approx((b + d) / (a + b + c + d))


def test_counts_consistent_with_observed_sizes():
    rng = np.random.default_rng(4)
    counts = make_counts(rng)
    est = _estimate(counts, eps=0.15, a1=0.3, a2=0.7)
    a, b, c, d, e, f = est.counts_hat
    m1, m2, uu = sizes_of(counts)
    assert a + b == pytest.approx(m1, abs=1e-6)
    assert c + d == pytest.approx(m2, abs=1e-6)
    assert e + f == pytest.approx(uu, abs=1e-6)
    assert np.all(est.counts_hat >= 0)


def test_all_quantity_pairs_recover():
    rng = np.random.default_rng(5)
    counts = make_counts(rng, eta0=0.25)
    a, b, c, d, e, f = counts
    pairs = [
        PriorQuantities(class1_total=a + d + e, type1_rate=d / (a + d)),
        PriorQuantities(class1_total=a + d + e, type2_rate=b / (b + c)),
        PriorQuantities(type1_rate=d / (a + d), type2_rate=b / (b + c)),
    ]
    for q in pairs:
        est = _estimate(counts, eps=0.08, a1=0.5, a2=0.5, quantities=q)
        assert abs(est.epsilon_hat - 0.08) <= 0.005 + 1e-12, q
        assert est.counts_hat == pytest.approx(counts, rel=0.02, abs=2.0)


def test_symmetric_epsilon_sentinel_runs():
    rng = np.random.default_rng(6)
    counts = make_counts(rng, eta0=0.1)
    # force type-1 noise to match the classifier error so the tied estimate fits
    a, b, c, d, e, f = counts
    eps = 0.1
    d_new = eps / (1 - eps) * a
    counts = np.array([a, b, c + d - d_new, d_new, e, f])
    est = _estimate(counts, eps=eps, a1=0.5, a2=0.5,
                    quantities=PriorQuantities(
                        class1_total=counts[0] + counts[3] + counts[4],
                        type1_rate=MATCH_EPSILON))
    assert abs(est.epsilon_hat - eps) <= 0.005 + 1e-12


def test_prior_quantities_validation():
    with pytest.raises(DataError):
        PriorQuantities(class1_total=100.0)  # only one quantity
    with pytest.raises(DataError):
        PriorQuantities(class1_total=1.0, type1_rate=1.5)
    with pytest.raises(DataError):
        PriorQuantities(class1_total=-1.0, type1_rate=0.1)


def test_infeasible_prior_raises():
    cfg = SelfTrainConfig()
    # class-1 total larger than the whole population can never fit
    with pytest.raises(EstimatorInfeasibleError):
        estimate_noise((400, 500, 100), (380, 520, 100), cfg,
                       PriorQuantities(class1_total=5000.0, type1_rate=0.0))


def test_size_bookkeeping_errors():
    cfg = SelfTrainConfig()
    q = PriorQuantities(class1_total=10.0, type1_rate=0.1)
    with pytest.raises(DataError):
        estimate_noise((10, 10, 0), (9, 10, 0), cfg, q)  # totals differ
    with pytest.raises(DataError):
        estimate_noise((0, 0, 10), (0, 0, 10), cfg, q)  # nothing labeled


def test_search_rates_incumbent_first():
    counts = np.array([400.0, 40.0, 500.0, 60.0, 0.0, 0.0])
    est = NoiseEstimate(epsilon_hat=0.05, eta_hat=0.1, residual=0.0,
                        counts_hat=counts, sizes_k=(440, 560, 0))
    # low current u: almost any pair predicts improvement, incumbent returned
    pair = search_rates(est, u_current=10.0, current_alpha=(0.3, 0.7))
    assert pair == (0.3, 0.7)


def test_search_rates_chance_level_returns_none():
    counts = np.array([400.0, 100.0, 400.0, 100.0, 0.0, 0.0])
    est = NoiseEstimate(epsilon_hat=0.5, eta_hat=0.2, residual=0.0,
                        counts_hat=counts, sizes_k=(500, 500, 0))
    assert search_rates(est, u_current=1.0, current_alpha=(0.5, 0.5)) is None


def test_search_rates_finds_the_only_feasible_corner():
    # perfect classifier, no mislabels: next u = a + c + e*a1 + f*a2,
    # so only (1.0, 1.0) can exceed a bar set just below the maximum
    counts = np.array([400.0, 0.0, 400.0, 0.0, 100.0, 100.0])
    est = NoiseEstimate(epsilon_hat=0.0, eta_hat=0.0, residual=0.0,
                        counts_hat=counts, sizes_k=(400, 400, 200))
    bar = 400 + 400 + 100 + 100 - 5.0
    pair = search_rates(est, u_current=bar, current_alpha=(0.5, 0.5))
    assert pair == (1.0, 1.0)


def test_search_rates_none_when_nothing_feasible():
    counts = np.array([400.0, 0.0, 400.0, 0.0, 100.0, 100.0])
    est = NoiseEstimate(epsilon_hat=0.0, eta_hat=0.0, residual=0.0,
                        counts_hat=counts, sizes_k=(400, 400, 200))
    assert search_rates(est, u_current=2000.0, current_alpha=(0.5, 0.5)) is None
