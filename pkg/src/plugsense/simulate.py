"""Synthetic plug-load and sensor traces with known ground-truth presence.

The generator mimics the signal structure seen on real office desks: two or
more distinct power levels (devices left on or off while away), step edges at
arrivals and departures, and high-frequency ripple whose amplitude tracks
active device use. Each simulated day draws an arrival and a departure, short
midday absences are carved out of the presence span, and every device decides
daily whether it is used and whether it stays on overnight.

All randomness flows through one seeded generator, so a (profile, seed) pair
reproduces byte-identical traces.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .trace import PowerTrace, PresenceSeries

# Midnight-aligned epoch base for simulated traces (hour-of-day = hour in trace).
BASE_EPOCH = 1_401_580_800

DEVICE_KINDS = ("desktop", "monitor", "laptop", "lamp", "charger")
SECONDS_PER_DAY = 86_400
WINDOW_SECONDS = 60


@dataclass(frozen=True)
class DeviceProfile:
    kind: str
    active_power: float
    idle_power: float
    ripple_sd_active: float
    ripple_sd_idle: float
    p_left_on_when_absent: float
    usage_prob: float = 1.0  # chance the device is actually used on a given day

    def __post_init__(self):
        if self.kind not in DEVICE_KINDS:
            raise DataError(f"unknown device kind {self.kind!r}")
        if not (self.active_power >= self.idle_power >= 0):
            raise DataError("need active_power >= idle_power >= 0")
        if self.ripple_sd_active < 0 or self.ripple_sd_idle < 0:
            raise DataError("ripple SDs must be >= 0")
        if not (0.0 <= self.p_left_on_when_absent <= 1.0 and 0.0 <= self.usage_prob <= 1.0):
            raise DataError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class ScheduleParams:
    arrival_mean: float = 9.3      # hours
    arrival_sd: float = 0.6
    departure_mean: float = 18.6   # hours
    departure_sd: float = 0.8
    midday_rate_per_hour: float = 0.2
    absence_mean_minutes: float = 35.0

    def __post_init__(self):
        if not self.arrival_mean < self.departure_mean:
            raise DataError("arrival must precede departure")
        if min(self.arrival_sd, self.departure_sd, self.midday_rate_per_hour,
               self.absence_mean_minutes) < 0:
            raise DataError("schedule parameters must be nonnegative")


@dataclass(frozen=True)
class UserProfile:
    name: str
    devices: tuple[DeviceProfile, ...]
    schedule: ScheduleParams = ScheduleParams()
    days: int = 30

    def __post_init__(self):
        if not self.devices:
            raise DataError("profile needs at least one device")
        if self.days < 1:
            raise DataError("days must be >= 1")
        object.__setattr__(self, "devices", tuple(self.devices))


def _carve_presence(rng: np.random.Generator, schedule: ScheduleParams, days: int) -> np.ndarray:
    present = np.zeros(days * SECONDS_PER_DAY, dtype=bool)
    for d in range(days):
        base = d * SECONDS_PER_DAY
        arrival = float(np.clip(rng.normal(schedule.arrival_mean, schedule.arrival_sd), 5.0, 12.0))
        departure = float(
            np.clip(rng.normal(schedule.departure_mean, schedule.departure_sd), arrival + 2.0, 23.75)
        )
        present[base + int(arrival * 3600): base + int(departure * 3600)] = True
        if schedule.midday_rate_per_hour > 0:
            t = arrival
            while True:
                t += rng.exponential(1.0 / schedule.midday_rate_per_hour)
                if t >= departure:
                    break
                duration = max(2.0 / 60.0, rng.exponential(schedule.absence_mean_minutes / 60.0))
                end = min(t + duration, departure)
                present[base + int(t * 3600): base + int(end * 3600)] = False
                t = end
    return present


def simulate_user(profile: UserProfile, seed: int = 0) -> tuple[PowerTrace, PresenceSeries]:
    """Generate a 1 Hz power trace and the per-minute ground-truth presence."""
    rng = np.random.default_rng(seed)
    days = profile.days
    total = days * SECONDS_PER_DAY
    present = _carve_presence(rng, profile.schedule, days)

    # Day boundaries for device state machines: occupied span per day.
    day_spans = []
    for d in range(days):
        base = d * SECONDS_PER_DAY
        occupied = np.flatnonzero(present[base:base + SECONDS_PER_DAY])
        if len(occupied):
            day_spans.append((base + occupied[0], base + occupied[-1] + 1))
        else:
            day_spans.append((base + SECONDS_PER_DAY // 2, base + SECONDS_PER_DAY // 2))

    level = np.zeros(total)
    var = np.zeros(total)
    for dev in profile.devices:
        night_on = rng.random() < dev.p_left_on_when_absent
        sda2 = dev.ripple_sd_active ** 2
        sdi2 = dev.ripple_sd_idle ** 2
        var += sdi2  # baseline flicker everywhere
        for d in range(days):
            base = d * SECONDS_PER_DAY
            day_end = base + SECONDS_PER_DAY
            span_lo, span_hi = day_spans[d]
            in_use = rng.random() < dev.usage_prob
            left_on_tonight = rng.random() < dev.p_left_on_when_absent
            # Morning: whatever state last night left the device in.
            morning = dev.active_power if night_on else dev.idle_power
            level[base:span_lo] += morning
            # Workday: an in-use device runs through short absences.
            if in_use:
                level[span_lo:span_hi] += dev.active_power
                seg = present[span_lo:span_hi]
                var[span_lo:span_hi] += np.where(seg, sda2 - sdi2, 0.0)
            else:
                level[span_lo:span_hi] += dev.idle_power
            # Evening: possibly left running overnight.
            night_on = in_use and left_on_tonight
            evening = dev.active_power if night_on else dev.idle_power
            level[span_hi:day_end] += evening

    watts = level + rng.standard_normal(total) * np.sqrt(var)
    np.clip(watts, 0.0, None, out=watts)
    timestamps = BASE_EPOCH + np.arange(total, dtype=np.int64)
    trace = PowerTrace(user_id=profile.name, timestamps=timestamps, watts=watts)

    n_windows = total // WINDOW_SECONDS
    frac = present[: n_windows * WINDOW_SECONDS].reshape(n_windows, WINDOW_SECONDS).mean(axis=1)
    truth = PresenceSeries(
        window_starts=BASE_EPOCH + WINDOW_SECONDS * np.arange(n_windows, dtype=np.int64),
        states=(frac >= 0.5).astype(np.int8),
    )
    return trace, truth


@dataclass(frozen=True)
class SensorNoise:
    """Noise model for the auxiliary sensor channels."""

    ultra_present_m: float = 0.6
    ultra_absent_m: float = 3.5
    ultra_sd: float = 0.05
    obstacle_m: float = 0.9
    obstacle_day_rate: float = 0.05   # days with an obstacle parked at the desk
    accel_present_sd: float = 0.08
    accel_absent_sd: float = 0.004
    accel_noise_sd: float = 0.06
    accel_noise_tail_days: int = 5    # trailing days with overwhelming accel noise
    wifi_event_prob_per_minute: float = 0.035
    wifi_dropout_day_rate: float = 0.45  # days with the phone off the network

    @classmethod
    def clean(cls) -> "SensorNoise":
        """Noise-free channels plus a dense, never-dropping WiFi beacon."""
        return cls(
            ultra_sd=0.0,
            obstacle_day_rate=0.0,
            accel_noise_sd=0.0,
            accel_noise_tail_days=0,
            wifi_event_prob_per_minute=0.25,
            wifi_dropout_day_rate=0.0,
        )


@dataclass(frozen=True)
class SensorTraces:
    ultrasonic_times: np.ndarray   # int64, one per 10 s
    ultrasonic_m: np.ndarray
    accel_times: np.ndarray        # int64, 1 Hz
    accel_xyz: np.ndarray          # (n, 3) in g
    wifi_times: np.ndarray         # association event timestamps


def simulate_sensors(
    truth: PresenceSeries,
    seed: int = 0,
    noise: SensorNoise = SensorNoise(),
) -> SensorTraces:
    """Generate ultrasonic, acceleration, and WiFi traces matching a truth series."""
    if len(truth) == 0:
        raise DataError("empty input")
    rng = np.random.default_rng(seed)
    starts = truth.window_starts
    states = truth.states.astype(bool)
    day_index = (starts - starts[0]) // SECONDS_PER_DAY
    n_days = int(day_index[-1]) + 1
    obstacle_days = rng.random(n_days) < noise.obstacle_day_rate
    dropout_days = rng.random(n_days) < noise.wifi_dropout_day_rate

    # Ultrasonic: one range sample every 10 s.
    per_window = WINDOW_SECONDS // 10
    ultra_times = (starts[:, None] + 10 * np.arange(per_window)).ravel()
    window_present = np.repeat(states, per_window)
    window_obstacle = np.repeat(obstacle_days[day_index], per_window)
    base = np.where(
        window_present,
        noise.ultra_present_m,
        np.where(window_obstacle, noise.obstacle_m, noise.ultra_absent_m),
    )
    ultra = base + (rng.standard_normal(len(base)) * noise.ultra_sd if noise.ultra_sd > 0 else 0.0)
    np.clip(ultra, 0.05, None, out=ultra)

    # Acceleration: 1 Hz magnitudes around 1 g on the z axis.
    accel_times = (starts[:, None] + np.arange(WINDOW_SECONDS)).ravel()
    sd = np.where(states, noise.accel_present_sd, noise.accel_absent_sd)
    if noise.accel_noise_tail_days > 0 and noise.accel_noise_sd > 0:
        tail = day_index >= n_days - noise.accel_noise_tail_days
        sd = np.hypot(sd, np.where(tail, noise.accel_noise_sd, 0.0))
    mags = 1.0 + rng.standard_normal(len(accel_times)) * np.repeat(sd, WINDOW_SECONDS)
    np.clip(mags, 0.0, None, out=mags)
    accel = np.zeros((len(accel_times), 3))
    accel[:, 2] = mags

    # WiFi: sparse association events while present, none on dropout days.
    can_emit = states & ~dropout_days[day_index]
    emit = can_emit & (rng.random(len(starts)) < noise.wifi_event_prob_per_minute)
    wifi_times = starts[emit]

    return SensorTraces(
        ultrasonic_times=ultra_times.astype(np.int64),
        ultrasonic_m=ultra,
        accel_times=accel_times.astype(np.int64),
        accel_xyz=accel,
        wifi_times=wifi_times.astype(np.int64),
    )


def truth_states_at(truth: PresenceSeries, timestamps) -> np.ndarray:
    """Truth state at arbitrary timestamps (each maps to its covering window)."""
    ts = np.asarray(timestamps, dtype=np.int64)
    idx = np.clip(np.searchsorted(truth.window_starts, ts, side="right") - 1, 0, len(truth) - 1)
    return truth.states[idx]


def _desktop(active, p_left, usage=0.92):
    return DeviceProfile("desktop", active, 3.0, 6.5, 1.3, p_left, usage)


def _monitor(active=26.0, usage=0.9):
    return DeviceProfile("monitor", active, 0.5, 2.2, 0.25, 0.12, usage)


def _laptop(usage, active=38.0):
    return DeviceProfile("laptop", active, 1.2, 5.5, 0.5, 0.15, usage)


def _lamp():
    return DeviceProfile("lamp", 9.0, 0.0, 0.8, 0.05, 0.05, 0.7)


def _charger(active=5.0, usage=0.65):
    return DeviceProfile("charger", active, 0.4, 0.9, 0.12, 0.35, usage)


PRESETS: dict[str, UserProfile] = {
    # No desktop: a low-power laptop usually left charging overnight with no
    # usable ripple gap, monitor only on some days. Laptop-only presence is
    # statistically close to left-on absence, which is what makes this
    # profile degradation-prone.
    "user8": UserProfile(
        name="user8",
        devices=(
            DeviceProfile("monitor", 24.0, 0.4, 1.6, 0.3, 0.1, 0.5),
            DeviceProfile("laptop", 23.0, 1.0, 0.8, 0.55, 0.5, 0.95),
            DeviceProfile("lamp", 9.0, 0.0, 0.08, 0.05, 0.05, 0.65),
            DeviceProfile("charger", 4.5, 0.3, 0.2, 0.08, 0.35, 0.5),
        ),
        schedule=ScheduleParams(9.0, 0.6, 19.8, 0.7, 0.18, 32.0),
    ),
    # Desktop frequently left on overnight; laptop seldom used.
    "user17": UserProfile(
        name="user17",
        devices=(_desktop(95.0, 0.45), _monitor(), _laptop(usage=0.25, active=35.0),
                 _lamp(), _charger()),
        schedule=ScheduleParams(8.9, 0.6, 19.4, 0.8, 0.2, 35.0),
    ),
    # Two monitors, several chargers, early schedule.
    "user20": UserProfile(
        name="user20",
        devices=(_desktop(110.0, 0.35, usage=0.9), _monitor(24.0), _monitor(22.0, usage=0.85),
                 _laptop(usage=0.85), _lamp(), _charger(), _charger(4.0, usage=0.5)),
        schedule=ScheduleParams(8.6, 0.5, 19.0, 0.7, 0.22, 30.0),
    ),
    # Long days, desktop left on half the nights.
    "user26": UserProfile(
        name="user26",
        devices=(_desktop(90.0, 0.5), _monitor(), _laptop(usage=0.85), _lamp(), _charger()),
        schedule=ScheduleParams(9.0, 0.6, 20.1, 0.9, 0.2, 40.0),
    ),
}


def get_preset(name: str, days: int | None = None) -> UserProfile:
    if name not in PRESETS:
        raise DataError(f"unknown preset {name!r} (have: {', '.join(sorted(PRESETS))})")
    profile = PRESETS[name]
    return replace(profile, days=days) if days is not None else profile
