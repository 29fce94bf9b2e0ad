import numpy as np
import pytest

from plugsense.errors import DegenerateLabelingError
from plugsense.features import FeatureMatrix
from plugsense.selftrain import PriorSchedule, SelfTrainConfig, run_self_training
from plugsense.trace import LABEL_PRESENT, states_to_labels


def separable_matrix(days=4, jitter=0.02, seed=0):
    """Hourly windows whose features follow the default schedule exactly."""
    rng = np.random.default_rng(seed)
    starts = 3600 * np.arange(24 * days, dtype=np.int64)
    present = PriorSchedule.default().labels_for(starts) == LABEL_PRESENT
    n = len(starts)

    def col(hi, lo):
        return np.where(present, hi, lo) + rng.normal(0, jitter, n)

    columns = {
        "mean_power": col(100.0, 2.0),
        "mac": col(8.0, 0.3),
        "mad": col(2.0, 0.1),
        "mahd": col(3.0, 0.15),
        "sd": col(2.5, 0.12),
    }
    return FeatureMatrix(
        window_starts=starts,
        columns=columns,
        view_selection=("mean_power", "mac", "mad", "sd"),
        gap_flags=np.zeros(n, dtype=bool),
    ), present


def test_prior_fixed_point_converges_immediately():
    matrix, present = separable_matrix()
    result = run_self_training(matrix, PriorSchedule.default(), SelfTrainConfig(seed=0))
    assert result.stop_reason == "stopping_metric"
    assert len(result.diagnostics) == 2  # fixed point detected at round 1
    assert result.best_iteration == 0
    assert np.array_equal(result.series.states.astype(bool), present)
    # first round is a perfect fit: no contested labels, zero estimated noise
    assert result.diagnostics[0].eps_hat == 0.0
    assert result.diagnostics[0].eta_hat == 0.0
    assert result.diagnostics[1].phi == 0.0 and result.diagnostics[1].stopped


def test_determinism_bytes_in_bytes_out():
    matrix, _ = separable_matrix(jitter=1.5, seed=3)
    cfg = SelfTrainConfig(seed=42, alpha1=0.4, alpha2=0.6)
    a = run_self_training(matrix, PriorSchedule.default(), cfg)
    b = run_self_training(matrix, PriorSchedule.default(), cfg)
    assert np.array_equal(a.series.states, b.series.states)
    assert a.diagnostics == b.diagnostics
    assert a.best_iteration == b.best_iteration and a.stop_reason == b.stop_reason


def test_diagnostics_identities_every_row():
    matrix, _ = separable_matrix(jitter=2.0, seed=4)
    cfg = SelfTrainConfig(seed=1, stop_on_negative_phi=False, max_iter=8)
    result = run_self_training(matrix, PriorSchedule.default(), cfg)
    u_prev = 0.0
    for row in result.diagnostics:
        assert row.u_k == (row.l1 + row.l2) * (1.0 - 2.0 * row.eta_hat) ** 2
        assert row.phi == row.u_k - u_prev
        assert (row.phi > 0) == (row.u_k > u_prev)
        assert row.stopped == (row.phi <= 0)
        u_prev = row.u_k


def test_best_iterate_retention():
    matrix, _ = separable_matrix(jitter=2.0, seed=5)
    cfg = SelfTrainConfig(seed=2, stop_on_negative_phi=False, max_iter=10)
    result = run_self_training(matrix, PriorSchedule.default(), cfg)
    best = result.best_iteration
    u_values = [row.u_k for row in result.diagnostics]
    assert u_values[best] == max(u_values)
    assert best == int(np.argmax(u_values))  # earliest among ties


def test_retained_labelings_only_when_requested():
    matrix, _ = separable_matrix()
    off = run_self_training(matrix, PriorSchedule.default(), SelfTrainConfig(seed=0))
    assert off.labelings is None
    on = run_self_training(matrix, PriorSchedule.default(),
                           SelfTrainConfig(seed=0, retain_labelings=True))
    assert len(on.labelings) == len(on.diagnostics)
    assert all(set(np.unique(lab)) <= {1, 2} for lab in on.labelings)


def test_degenerate_prior_raises_with_diagnostics():
    matrix, _ = separable_matrix()
    all_present = PriorSchedule.from_string("1" * 24)
    with pytest.raises(DegenerateLabelingError) as exc:
        run_self_training(matrix, all_present, SelfTrainConfig(seed=0))
    assert exc.value.diagnostics == ()


def test_rate_search_rescue_path_runs():
    matrix, _ = separable_matrix(jitter=2.5, seed=6)
    cfg = SelfTrainConfig(seed=3, rate_search=True, max_iter=6)
    result = run_self_training(matrix, PriorSchedule.default(), cfg)
    assert result.stop_reason in ("stopping_metric", "max_iter", "estimator_infeasible")
    assert len(result.final_alpha) == 2


def test_final_series_fills_unlabeled_windows():
    matrix, _ = separable_matrix(jitter=1.0, seed=7)
    cfg = SelfTrainConfig(seed=5, alpha1=0.2, alpha2=0.2, stop_on_negative_phi=False, max_iter=4)
    result = run_self_training(matrix, PriorSchedule.default(), cfg)
    assert len(result.series) == len(matrix)
    assert set(np.unique(result.series.states)) <= {0, 1}
