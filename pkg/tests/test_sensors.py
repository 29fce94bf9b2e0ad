import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plugsense.errors import DataError
from plugsense.sensors import (
    AccelConfig,
    UltrasonicConfig,
    WifiConfig,
    accel_rule,
    accel_sigma,
    ultrasonic_distance,
    ultrasonic_rule,
    wifi_rule,
)


def test_distance_values():
    assert ultrasonic_distance(0.0) == 0.0
    assert ultrasonic_distance(0.01) == pytest.approx(1.7)
    assert ultrasonic_distance(0.02) == pytest.approx(3.4)  # linear in round-trip time
    with pytest.raises(DataError):
        ultrasonic_distance(-0.1)


def test_ultrasonic_rule_boundaries():
    cfg = UltrasonicConfig(absence_intervals=((2.0, math.inf),))
    out = ultrasonic_rule([0, 10], [1.0, 2.0], cfg)
    assert out.states[0] == 1  # 1.0 m outside the absence interval
    assert out.states[1] == 0  # boundary value belongs to the closed interval


def test_ultrasonic_alternating():
    cfg = UltrasonicConfig(absence_intervals=((2.0, 4.0),))
    out = ultrasonic_rule(np.arange(4) * 10, [1.0, 3.0, 1.0, 3.0], cfg)
    assert np.array_equal(out.states, [1, 0, 1, 0])


def test_ultrasonic_multiple_intervals():
    cfg = UltrasonicConfig(absence_intervals=((0.0, 0.1), (2.0, 4.0)))
    out = ultrasonic_rule(np.arange(3), [0.05, 1.0, 3.0], cfg)
    assert np.array_equal(out.states, [0, 1, 0])


def test_ultrasonic_config_validation():
    with pytest.raises(DataError):
        UltrasonicConfig(absence_intervals=((3.0, 2.0),))
    with pytest.raises(DataError):
        UltrasonicConfig(absence_intervals=((0.0, 2.0), (1.0, 3.0)))


def test_accel_sigma_values():
    assert accel_sigma([(0, 0, 1), (0, 0, 1)]) == 0.0
    # magnitudes (3,4,0) -> 5; [1,1,3]: mu=5/3, sigma=sqrt(8/9)
    tri = [(1, 0, 0), (1, 0, 0), (3, 0, 0)]
    assert accel_sigma(tri) == pytest.approx(math.sqrt(8 / 9))
    assert accel_sigma([(3, 4, 0), (0, 3, 4), (5, 0, 0)]) == 0.0  # all magnitude 5
    with pytest.raises(DataError):
        accel_sigma([(1, 0, 0)])


def test_accel_sigma_rotation_invariance():
    rng = np.random.default_rng(0)
    samples = rng.normal(0, 1, (40, 3))
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    assert accel_sigma(samples @ q.T) == pytest.approx(accel_sigma(samples))


def test_accel_rule_threshold():
    out = accel_rule(np.arange(2) * 60, [0.01, 0.05], AccelConfig(theta=0.03))
    assert np.array_equal(out.states, [0, 1])
    out = accel_rule(np.arange(3) * 60, [0.0, 0.0, 0.0], AccelConfig(theta=0.03))
    assert not out.states.any()
    out = accel_rule(np.arange(2) * 60, [0.01, 0.02], AccelConfig(theta=0.05))
    assert not out.states.any()


def test_wifi_empty_observations():
    out = wifi_rule([], np.arange(5) * 60, WifiConfig(delta=3600))
    assert not out.states.any()


def test_wifi_one_hour_window():
    noon = 12 * 3600
    queries = np.array([noon - 3700, noon - 3599, noon, noon + 3599, noon + 3700])
    out = wifi_rule([noon], queries, WifiConfig(delta=3600))
    assert np.array_equal(out.states, [0, 1, 1, 1, 0])


def test_wifi_merged_span():
    obs = [10_000, 11_800]  # 30 minutes apart
    queries = np.arange(10_000 - 4000, 11_800 + 4000, 60)
    out = wifi_rule(obs, queries, WifiConfig(delta=3600))
    present = queries[out.states == 1]
    assert np.all(np.diff(present) == 60)  # one contiguous presence span


@settings(max_examples=50)
@given(
    st.lists(st.integers(min_value=0, max_value=100_000), min_size=0, max_size=20),
    st.lists(st.integers(min_value=0, max_value=100_000), min_size=1, max_size=50, unique=True),
    st.integers(min_value=1, max_value=10_000),
)
def test_wifi_matches_bruteforce(obs, queries, delta):
    queries = sorted(queries)
    out = wifi_rule(obs, queries, WifiConfig(delta=delta))
    for q, state in zip(queries, out.states):
        expected = any(abs(q - o) < delta for o in obs)
        assert bool(state) == expected


def test_pointwise_rules_permute_with_inputs():
    cfg = UltrasonicConfig(absence_intervals=((2.0, 4.0),))
    d = np.array([1.0, 3.0, 5.0, 2.5])
    ts = np.array([0, 10, 20, 30])
    base = ultrasonic_rule(ts, d, cfg).states
    flipped = ultrasonic_rule(ts, d[::-1], cfg).states
    assert np.array_equal(flipped, base[::-1])
