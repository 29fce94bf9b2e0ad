import numpy as np
import pytest
from scipy.stats import mannwhitneyu

from plugsense.errors import DataError
from plugsense.features import sd
from plugsense.simulate import (
    DeviceProfile,
    ScheduleParams,
    SensorNoise,
    UserProfile,
    get_preset,
    simulate_sensors,
    simulate_user,
    truth_states_at,
)
from plugsense.trace import WindowSpec, windowize


def tiny_profile(days=2, **device_kw):
    device = dict(kind="desktop", active_power=100.0, idle_power=2.0,
                  ripple_sd_active=5.0, ripple_sd_idle=0.5,
                  p_left_on_when_absent=0.0, usage_prob=1.0)
    device.update(device_kw)
    return UserProfile(
        name="t",
        devices=(DeviceProfile(**device),),
        schedule=ScheduleParams(9.0, 0.0, 18.0, 0.0, 0.0, 30.0),
        days=days,
    )


def test_determinism():
    prof = get_preset("user17", days=2)
    a_trace, a_truth = simulate_user(prof, seed=9)
    b_trace, b_truth = simulate_user(prof, seed=9)
    assert np.array_equal(a_trace.watts, b_trace.watts)
    assert np.array_equal(a_truth.states, b_truth.states)
    c_trace, _ = simulate_user(prof, seed=10)
    assert not np.array_equal(a_trace.watts, c_trace.watts)


def test_noise_free_trace_is_piecewise_constant():
    prof = tiny_profile(ripple_sd_active=0.0, ripple_sd_idle=0.0)
    trace, truth = simulate_user(prof, seed=0)
    diffs = np.flatnonzero(np.diff(trace.watts) != 0)
    # edges exactly at arrival/departure transitions
    state_edges = np.flatnonzero(np.diff(truth_states_at(truth, trace.timestamps)) != 0)
    assert len(diffs) == len(state_edges)
    assert np.array_equal(diffs, state_edges)


def test_noise_free_transition_step_at_least_device_delta():
    prof = tiny_profile(ripple_sd_active=0.0, ripple_sd_idle=0.0)
    trace, _ = simulate_user(prof, seed=1)
    steps = np.abs(np.diff(trace.watts))
    steps = steps[steps > 0]
    assert np.all(steps >= 100.0 - 2.0 - 1e-9)  # active minus idle


def test_left_on_desktop_makes_absence_bimodal():
    prof = tiny_profile(days=20, p_left_on_when_absent=0.5)
    trace, truth = simulate_user(prof, seed=2)
    absent = truth_states_at(truth, trace.timestamps) == 0
    watts = trace.watts[absent]
    low = np.mean(watts < 50)
    high = np.mean(watts >= 50)
    assert 0.2 < low < 0.8 and 0.2 < high < 0.8  # both absence modes populated


def test_presence_fraction_concentrates():
    prof = get_preset("user17", days=50)
    _, truth = simulate_user(prof, seed=3)
    sched = prof.schedule
    span = sched.departure_mean - sched.arrival_mean
    carve = sched.midday_rate_per_hour * span * (sched.absence_mean_minutes / 60.0)
    expected = (span - carve) / 24.0
    assert truth.states.mean() == pytest.approx(expected, abs=0.03)


def test_presence_sd_dominates_absence_sd():
    prof = get_preset("user17", days=5)
    trace, truth = simulate_user(prof, seed=4)
    windows = windowize(trace, WindowSpec(width=60))
    sds = np.array([sd(w.watts) for w in windows])
    pres = truth.states.astype(bool)
    rng = np.random.default_rng(0)
    a = rng.choice(sds[pres], 500, replace=False)
    b = rng.choice(sds[~pres], 500, replace=False)
    assert mannwhitneyu(a, b, alternative="greater").pvalue < 0.01


def test_profile_validation():
    with pytest.raises(DataError):
        DeviceProfile("desktop", 1.0, 2.0, 0.1, 0.1, 0.5)  # idle above active
    with pytest.raises(DataError):
        UserProfile(name="x", devices=(), schedule=ScheduleParams())
    with pytest.raises(DataError):
        ScheduleParams(arrival_mean=19.0, departure_mean=9.0)
    with pytest.raises(DataError):
        get_preset("nobody")


def test_sensor_determinism_and_alignment():
    _, truth = simulate_user(get_preset("user8", days=3), seed=5)
    a = simulate_sensors(truth, seed=6)
    b = simulate_sensors(truth, seed=6)
    assert np.array_equal(a.ultrasonic_m, b.ultrasonic_m)
    assert np.array_equal(a.accel_xyz, b.accel_xyz)
    assert np.array_equal(a.wifi_times, b.wifi_times)
    assert len(a.ultrasonic_times) == 6 * len(truth)  # one range sample per 10 s
    assert len(a.accel_times) == 60 * len(truth)


def test_clean_sensors_have_no_noise():
    _, truth = simulate_user(get_preset("user17", days=3), seed=7)
    traces = simulate_sensors(truth, seed=8, noise=SensorNoise.clean())
    values = np.unique(traces.ultrasonic_m)
    assert set(values) <= {0.6, 3.5}


def test_truth_states_at_maps_windows():
    _, truth = simulate_user(get_preset("user17", days=1), seed=9)
    ts = truth.window_starts[5] + np.array([0, 30, 59])
    assert np.all(truth_states_at(truth, ts) == truth.states[5])
