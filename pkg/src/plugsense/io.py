"""CSV and JSON file formats.

All artifacts are written deterministically: fixed column orders, fixed float
formatting, sorted JSON keys, and no wall-clock fields, so a rerun with the
same config and seed is byte-identical.
"""
from __future__ import annotations

import csv
import json
import re
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError
from .selftrain import IterationRecord
from .trace import PowerTrace, PresenceSeries


def _parse_timestamp(text: str, path, line_no: int) -> int:
    text = text.strip()
    try:
        return int(float(text))  # epoch seconds; sub-second input truncated
    except ValueError:
        pass
    iso = text.replace("Z", "+00:00")
    # Python 3.10 only accepts 3- or 6-digit fractions; normalize to 6.
    m = re.match(r"^(.*T\d{2}:\d{2}:\d{2})\.(\d+)(.*)$", iso)
    if m:
        iso = f"{m.group(1)}.{m.group(2)[:6].ljust(6, '0')}{m.group(3)}"
    try:
        dt = datetime.fromisoformat(iso)
    except ValueError:
        raise DataError(f"{path}:{line_no}: cannot parse timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _open_rows(path, expected_header: list[str]):
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}:1: empty input") from None
        if [h.strip() for h in header] != expected_header:
            raise DataError(f"{path}:1: expected header {','.join(expected_header)!r}")
        rows = [(i, row) for i, row in enumerate(reader, start=2) if row]
    return rows


def read_trace_csv(path, user_id: str | None = None, nominal_period: int = 1) -> PowerTrace:
    """Read `timestamp,watts` rows; timestamps may be epoch seconds or ISO-8601."""
    rows = _open_rows(path, ["timestamp", "watts"])
    if not rows:
        raise DataError(f"{path}: empty input")
    ts = np.empty(len(rows), dtype=np.int64)
    watts = np.empty(len(rows), dtype=np.float64)
    for k, (line_no, row) in enumerate(rows):
        if len(row) != 2:
            raise DataError(f"{path}:{line_no}: expected 2 fields, got {len(row)}")
        ts[k] = _parse_timestamp(row[0], path, line_no)
        try:
            watts[k] = float(row[1])
        except ValueError:
            raise DataError(f"{path}:{line_no}: cannot parse watts {row[1]!r}") from None
        if not np.isfinite(watts[k]) or watts[k] < 0:
            raise DataError(f"{path}:{line_no}: watts must be finite and >= 0")
    try:
        return PowerTrace(
            user_id=user_id or Path(path).stem,
            timestamps=ts,
            watts=watts,
            nominal_period=nominal_period,
        )
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_trace_csv(path, trace: PowerTrace) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "watts"])
        for t, w in zip(trace.timestamps, trace.watts):
            writer.writerow([int(t), f"{w:.4f}"])


def read_presence_csv(path) -> PresenceSeries:
    rows = _open_rows(path, ["window_start", "state"])
    if not rows:
        raise DataError(f"{path}: empty input")
    starts = np.empty(len(rows), dtype=np.int64)
    states = np.empty(len(rows), dtype=np.int8)
    for k, (line_no, row) in enumerate(rows):
        if len(row) != 2:
            raise DataError(f"{path}:{line_no}: expected 2 fields, got {len(row)}")
        starts[k] = _parse_timestamp(row[0], path, line_no)
        if row[1].strip() not in ("0", "1"):
            raise DataError(f"{path}:{line_no}: state must be 0 or 1")
        states[k] = int(row[1])
    try:
        return PresenceSeries(window_starts=starts, states=states)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_presence_csv(path, series: PresenceSeries) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_start", "state"])
        for t, s in zip(series.window_starts, series.states):
            writer.writerow([int(t), int(s)])


FEATURE_COLUMNS = ["window_start", "mean_power", "mac", "mad", "mahd", "sd"]


def write_features_csv(path, matrix) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_COLUMNS)
        cols = [matrix.columns[name] for name in FEATURE_COLUMNS[1:]]
        for i, start in enumerate(matrix.window_starts):
            writer.writerow([int(start)] + [repr(float(c[i])) for c in cols])


def read_features_csv(path, views) -> "FeatureMatrix":
    from .features import FeatureMatrix  # local import to avoid a cycle

    rows = _open_rows(path, FEATURE_COLUMNS)
    if not rows:
        raise DataError(f"{path}: empty input")
    starts = np.empty(len(rows), dtype=np.int64)
    columns = {name: np.empty(len(rows)) for name in FEATURE_COLUMNS[1:]}
    for k, (line_no, row) in enumerate(rows):
        if len(row) != len(FEATURE_COLUMNS):
            raise DataError(f"{path}:{line_no}: expected {len(FEATURE_COLUMNS)} fields")
        starts[k] = _parse_timestamp(row[0], path, line_no)
        for j, name in enumerate(FEATURE_COLUMNS[1:], start=1):
            try:
                columns[name][k] = float(row[j])
            except ValueError:
                raise DataError(f"{path}:{line_no}: cannot parse {name} {row[j]!r}") from None
    return FeatureMatrix(
        window_starts=starts,
        columns=columns,
        view_selection=tuple(views),
        gap_flags=np.zeros(len(rows), dtype=bool),
    )


DIAGNOSTIC_COLUMNS = ["iter", "l1", "l2", "u", "eps_hat", "eta_hat", "u_k", "phi", "stopped"]


def write_diagnostics_csv(path, records: tuple[IterationRecord, ...]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DIAGNOSTIC_COLUMNS)
        for r in records:
            writer.writerow(
                [r.iteration, r.l1, r.l2, r.u, repr(r.eps_hat), repr(r.eta_hat),
                 repr(r.u_k), repr(r.phi), int(r.stopped)]
            )


def write_ultrasonic_csv(path, timestamps, distances) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "distance_m"])
        for t, d in zip(timestamps, distances):
            writer.writerow([int(t), f"{d:.4f}"])


def read_ultrasonic_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _open_rows(path, ["timestamp", "distance_m"])
    if not rows:
        raise DataError(f"{path}: empty input")
    ts = np.empty(len(rows), dtype=np.int64)
    d = np.empty(len(rows))
    for k, (line_no, row) in enumerate(rows):
        ts[k] = _parse_timestamp(row[0], path, line_no)
        try:
            d[k] = float(row[1])
        except ValueError:
            raise DataError(f"{path}:{line_no}: cannot parse distance {row[1]!r}") from None
    return ts, d


def write_accel_csv(path, timestamps, xyz) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "ax", "ay", "az"])
        for t, (x, y, z) in zip(timestamps, xyz):
            writer.writerow([int(t), f"{x:.6f}", f"{y:.6f}", f"{z:.6f}"])


def read_accel_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _open_rows(path, ["timestamp", "ax", "ay", "az"])
    if not rows:
        raise DataError(f"{path}: empty input")
    ts = np.empty(len(rows), dtype=np.int64)
    xyz = np.empty((len(rows), 3))
    for k, (line_no, row) in enumerate(rows):
        if len(row) != 4:
            raise DataError(f"{path}:{line_no}: expected 4 fields")
        ts[k] = _parse_timestamp(row[0], path, line_no)
        try:
            xyz[k] = [float(row[1]), float(row[2]), float(row[3])]
        except ValueError:
            raise DataError(f"{path}:{line_no}: cannot parse acceleration") from None
    return ts, xyz


def write_wifi_csv(path, timestamps) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp"])
        for t in timestamps:
            writer.writerow([int(t)])


def read_wifi_csv(path) -> np.ndarray:
    rows = _open_rows(path, ["timestamp"])
    return np.array([_parse_timestamp(row[0], path, line_no) for line_no, row in rows],
                    dtype=np.int64)


def write_json(path, payload: dict) -> None:
    with Path(path).open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with path.open() as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def write_metrics_json(path, user: str, model: str, rates) -> None:
    write_json(path, {
        "user": user,
        "model": model,
        "absence": rates.absence_rate,
        "presence": rates.presence_rate,
        "overall": rates.overall,
    })
