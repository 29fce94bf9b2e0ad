"""File-based pipeline stages behind the service endpoints.

Every stage reads its inputs from disk, runs the core library, writes its
artifacts under the request's output directory, and returns a summary. Train
and simulate also write a manifest holding the fully resolved request, which
is sufficient to reproduce the artifacts byte-for-byte.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .. import io as pio
from ..baselines import ThresholdModel, apply_model, change_metric, optimize_threshold, percentage_metric
from ..errors import DataError
from ..features import build_views
from ..metrics import detection_rates, hourly_absence
from ..selftrain import PriorSchedule, SelfTrainConfig, run_self_training
from ..sensors import AccelConfig, UltrasonicConfig, WifiConfig, accel_rule, accel_sigma, ultrasonic_rule, wifi_rule
from ..simulate import SensorNoise, get_preset, simulate_sensors, simulate_user
from ..trace import PresenceSeries, WindowSpec, windowize
from . import models


def _ensure_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_simulate(req: models.SimulateRequest) -> models.SimulateResponse:
    out = _ensure_dir(req.out_dir)
    profile = get_preset(req.preset, days=req.days)
    trace, truth = simulate_user(profile, seed=req.seed)
    trace_csv = out / f"{profile.name}_trace.csv"
    truth_csv = out / f"{profile.name}_truth.csv"
    pio.write_trace_csv(trace_csv, trace)
    pio.write_presence_csv(truth_csv, truth)
    artifacts = {"trace_csv": str(trace_csv), "truth_csv": str(truth_csv)}

    ultra = accel = wifi = None
    if req.sensors:
        noise = SensorNoise.clean() if req.sensor_noise == "clean" else SensorNoise()
        traces = simulate_sensors(truth, seed=req.seed, noise=noise)
        ultra = out / f"{profile.name}_ultrasonic.csv"
        accel = out / f"{profile.name}_accel.csv"
        wifi = out / f"{profile.name}_wifi.csv"
        pio.write_ultrasonic_csv(ultra, traces.ultrasonic_times, traces.ultrasonic_m)
        pio.write_accel_csv(accel, traces.accel_times, traces.accel_xyz)
        pio.write_wifi_csv(wifi, traces.wifi_times)
        artifacts.update(
            ultrasonic_csv=str(ultra), accel_csv=str(accel), wifi_csv=str(wifi)
        )

    manifest = out / f"{profile.name}_manifest.json"
    pio.write_json(manifest, {
        "command": "simulate",
        "config": req.model_dump(),
        "artifacts": artifacts,
    })
    return models.SimulateResponse(
        trace_csv=str(trace_csv),
        truth_csv=str(truth_csv),
        manifest_json=str(manifest),
        n_samples=len(trace),
        n_windows=len(truth),
        ultrasonic_csv=str(ultra) if ultra else None,
        accel_csv=str(accel) if accel else None,
        wifi_csv=str(wifi) if wifi else None,
    )


def run_extract(req: models.ExtractRequest) -> models.ExtractResponse:
    trace = pio.read_trace_csv(req.trace_csv)
    spec = WindowSpec(width=req.window_seconds, stride=req.stride_seconds)
    matrix = build_views(trace, spec, views=tuple(req.views))
    Path(req.out_csv).parent.mkdir(parents=True, exist_ok=True)
    pio.write_features_csv(req.out_csv, matrix)
    return models.ExtractResponse(
        features_csv=req.out_csv, n_windows=len(matrix), views=list(req.views)
    )


def run_train(req: models.TrainRequest) -> models.TrainResponse:
    out = _ensure_dir(req.out_dir)
    if req.features_csv is not None:
        matrix = pio.read_features_csv(req.features_csv, views=tuple(req.views))
        user = req.user or Path(req.features_csv).stem
    else:
        trace = pio.read_trace_csv(req.trace_csv)
        matrix = build_views(trace, WindowSpec(width=req.window_seconds), views=tuple(req.views))
        user = req.user or trace.user_id
    schedule = PriorSchedule.from_string(req.schedule)
    cfg = SelfTrainConfig(
        alpha1=req.alpha1,
        alpha2=req.alpha2,
        max_iter=req.max_iter,
        epsilon_grid_step=req.epsilon_grid_step,
        seed=req.seed,
        stop_on_negative_phi=req.stop_on_negative_phi,
        rate_search=req.rate_search,
        sample_unlabeled=req.sample_unlabeled,
    )
    result = run_self_training(matrix, schedule, cfg)

    presence_csv = out / f"{user}_presence.csv"
    diagnostics_csv = out / f"{user}_diagnostics.csv"
    manifest = out / f"{user}_train_manifest.json"
    pio.write_presence_csv(presence_csv, result.series)
    pio.write_diagnostics_csv(diagnostics_csv, result.diagnostics)
    pio.write_json(manifest, {
        "command": "train",
        "config": req.model_dump(),
        "artifacts": {"presence_csv": str(presence_csv), "diagnostics_csv": str(diagnostics_csv)},
        "result": {
            "iterations": len(result.diagnostics),
            "best_iteration": result.best_iteration,
            "stop_reason": result.stop_reason,
            "final_alpha": list(result.final_alpha),
        },
    })
    return models.TrainResponse(
        presence_csv=str(presence_csv),
        diagnostics_csv=str(diagnostics_csv),
        manifest_json=str(manifest),
        iterations=len(result.diagnostics),
        best_iteration=result.best_iteration,
        stop_reason=result.stop_reason,
        final_alpha1=result.final_alpha[0],
        final_alpha2=result.final_alpha[1],
    )


def run_baseline(req: models.BaselineRequest) -> models.BaselineResponse:
    out = _ensure_dir(req.out_dir)
    trace = pio.read_trace_csv(req.trace_csv)
    truth = pio.read_presence_csv(req.truth_csv)
    spec = WindowSpec(width=req.window_seconds)
    windows = windowize(trace, spec)
    starts = np.array([w.start for w in windows], dtype=np.int64)
    if len(starts) != len(truth) or not np.array_equal(starts, truth.window_starts):
        raise DataError("truth windows do not match the trace windows")

    if req.kind == "absolute":
        metric = np.array([w.watts.mean() for w in windows])
    elif req.kind == "change":
        metric = change_metric(windows)
    else:
        metric = percentage_metric(windows)

    schedule = PriorSchedule.from_string(req.schedule)
    initial_state = 1 if schedule.present_at(int(starts[0])) else 0
    grid = None
    if req.grid_step is not None:
        top = req.grid_max if req.grid_max is not None else float(metric.max())
        grid = np.arange(req.grid_step, max(top, req.grid_step) + req.grid_step, req.grid_step)
    threshold, accuracy = optimize_threshold(
        req.kind, metric, truth, grid=grid, initial_state=initial_state
    )
    model = ThresholdModel(kind=req.kind, threshold=threshold, initial_state=initial_state)
    mean_power = np.array([w.watts.mean() for w in windows])
    pred = apply_model(model, starts, windows, mean_power)
    rates = detection_rates(pred, truth)

    presence_csv = out / f"{trace.user_id}_{req.kind}_presence.csv"
    pio.write_presence_csv(presence_csv, pred)
    return models.BaselineResponse(
        presence_csv=str(presence_csv),
        kind=req.kind,
        threshold=threshold,
        train_accuracy=accuracy,
        absence=rates.absence_rate,
        presence=rates.presence_rate,
        overall=rates.overall,
    )


def run_sensors(req: models.SensorsRequest) -> models.SensorsResponse:
    out = _ensure_dir(req.out_dir)
    resp = models.SensorsResponse()
    span = []  # covered time range across all provided inputs

    if req.ultrasonic_csv:
        intervals = tuple(
            (a, math.inf if b is None else b) for a, b in req.absence_intervals
        )
        ts, dist = pio.read_ultrasonic_csv(req.ultrasonic_csv)
        span.append((int(ts.min()), int(ts.max())))
        series = ultrasonic_rule(ts, dist, UltrasonicConfig(absence_intervals=intervals))
        path = out / "ultrasonic_presence.csv"
        pio.write_presence_csv(path, series)
        resp.ultrasonic_presence_csv = str(path)

    if req.accel_csv:
        ts, xyz = pio.read_accel_csv(req.accel_csv)
        span.append((int(ts.min()), int(ts.max())))
        width = req.accel_window_seconds
        t0 = int(ts[0])
        bucket = (ts - t0) // width
        starts, sigmas = [], []
        for b in np.unique(bucket):
            rows = xyz[bucket == b]
            if len(rows) >= 2:
                starts.append(t0 + int(b) * width)
                sigmas.append(accel_sigma(rows))
        series = accel_rule(np.array(starts, dtype=np.int64), np.array(sigmas),
                            AccelConfig(theta=req.theta, window=width))
        path = out / "accel_presence.csv"
        pio.write_presence_csv(path, series)
        resp.accel_presence_csv = str(path)

    if req.wifi_csv:
        obs = pio.read_wifi_csv(req.wifi_csv)
        delta = int(req.delta)
        if len(obs):
            span.append((int(obs.min()) - delta, int(obs.max()) + delta))
        if not span:
            raise DataError(
                f"{req.wifi_csv}: no association events and no other sensor file "
                "to define the query range"
            )
        start = min(s for s, _ in span) // 60 * 60
        end = max(e for _, e in span)
        queries = np.arange(start, end + 60, 60, dtype=np.int64)
        series = wifi_rule(obs, queries, WifiConfig(delta=req.delta))
        path = out / "wifi_presence.csv"
        pio.write_presence_csv(path, series)
        resp.wifi_presence_csv = str(path)

    return resp


def run_eval(req: models.EvalRequest) -> models.EvalResponse:
    pred = pio.read_presence_csv(req.pred_csv)
    truth = pio.read_presence_csv(req.truth_csv)
    rates = detection_rates(pred, truth)
    hourly = None
    if req.hourly:
        ha = hourly_absence(pred)
        hourly = [None if math.isnan(v) else float(v) for v in ha.rates]
    out_json = None
    if req.out_json:
        Path(req.out_json).parent.mkdir(parents=True, exist_ok=True)
        pio.write_metrics_json(req.out_json, req.user, req.model, rates)
        out_json = req.out_json
    return models.EvalResponse(
        user=req.user,
        model=req.model,
        absence=rates.absence_rate,
        presence=rates.presence_rate,
        overall=rates.overall,
        absence_defined=rates.absence_defined,
        presence_defined=rates.presence_defined,
        metrics_json=out_json,
        hourly_absence=hourly,
    )
