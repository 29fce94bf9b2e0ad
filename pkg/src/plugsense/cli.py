"""Command-line client for the plugsense service.

Subcommands mirror the service endpoints (simulate, extract, train, baseline,
sensors, eval). By default each invocation runs the service in-process; pass
``--server`` to talk to a running instance instead, or use ``serve`` to start
one. Option values resolve as: built-in default < config file < command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 algorithm error.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .errors import UsageError

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise UsageError(f"cannot parse boolean {text!r}")


def _parse_views(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _parse_intervals(text: str) -> list[list[float | None]]:
    """"a:b;a:b" pairs; an empty or 'inf' upper bound means unbounded."""
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        lo_s, _, hi_s = part.partition(":")
        hi_s = hi_s.strip().lower()
        hi = None if hi_s in ("", "inf") else float(hi_s)
        out.append([float(lo_s), hi])
    if not out:
        raise UsageError("no absence intervals given")
    return out


# (flag, type tag, default, help) per command; None defaults mean "optional".
_FIELDS = {
    "simulate": [
        ("preset", "str", "user17", "simulator preset name"),
        ("days", "int", 30, "days to simulate"),
        ("seed", "int", 0, "RNG seed"),
        ("out_dir", "str", None, "output directory (required)"),
        ("sensors", "bool", False, "also emit sensor traces"),
        ("sensor_noise", "str", "default", "sensor noise model: default or clean"),
    ],
    "extract": [
        ("trace_csv", "str", None, "input power trace CSV (required)"),
        ("out_csv", "str", None, "output feature CSV (required)"),
        ("window_seconds", "int", 60, "window width"),
        ("stride_seconds", "int", None, "window stride (defaults to width)"),
        ("views", "views", None, "comma-separated view names"),
    ],
    "train": [
        ("trace_csv", "str", None, "input power trace CSV"),
        ("features_csv", "str", None, "precomputed feature CSV"),
        ("out_dir", "str", None, "output directory (required)"),
        ("user", "str", "", "user id for artifact names"),
        ("schedule", "str", "9-20", 'prior schedule, e.g. "9-20" or a 24-char 0/1 string'),
        ("views", "views", None, "comma-separated view names"),
        ("window_seconds", "int", 60, "window width"),
        ("alpha1", "float", 0.5, "sampling rate for contested present labels"),
        ("alpha2", "float", 0.5, "sampling rate for contested absent labels"),
        ("max_iter", "int", 30, "maximum training rounds"),
        ("epsilon_grid_step", "float", 0.005, "error-rate line search resolution"),
        ("seed", "int", 0, "RNG seed"),
        ("rate_search", "bool", False, "search sampling rates when the stop metric fires"),
        ("stop_on_negative_phi", "bool", True, "stop once the metric is nonpositive"),
        ("sample_unlabeled", "bool", True, "let unlabeled windows enter via sampling"),
    ],
    "baseline": [
        ("trace_csv", "str", None, "input power trace CSV (required)"),
        ("truth_csv", "str", None, "ground-truth presence CSV (required)"),
        ("out_dir", "str", None, "output directory (required)"),
        ("kind", "str", "absolute", "absolute, change, or percentage"),
        ("window_seconds", "int", 60, "window width"),
        ("schedule", "str", "9-20", "sets transition models' initial state"),
        ("grid_step", "float", None, "threshold grid step"),
        ("grid_max", "float", None, "threshold grid upper bound"),
    ],
    "sensors": [
        ("out_dir", "str", None, "output directory (required)"),
        ("ultrasonic_csv", "str", None, "ultrasonic distance CSV"),
        ("accel_csv", "str", None, "acceleration CSV"),
        ("wifi_csv", "str", None, "WiFi association events CSV"),
        ("absence_intervals", "intervals", None, 'distance absence intervals "a:b;a:b"'),
        ("theta", "float", 0.03, "acceleration threshold in g"),
        ("delta", "float", 3600.0, "WiFi presence half-width in seconds"),
        ("accel_window_seconds", "int", 60, "acceleration window width"),
    ],
    "eval": [
        ("pred_csv", "str", None, "predicted presence CSV (required)"),
        ("truth_csv", "str", None, "ground-truth presence CSV (required)"),
        ("user", "str", "", "user id for the metrics record"),
        ("model", "str", "", "model name for the metrics record"),
        ("out_json", "str", None, "optional metrics JSON path"),
        ("hourly", "bool", False, "include hourly absence rates"),
    ],
}

_REQUIRED = {
    "simulate": ("out_dir",),
    "extract": ("trace_csv", "out_csv"),
    "train": ("out_dir",),
    "baseline": ("trace_csv", "truth_csv", "out_dir"),
    "sensors": ("out_dir",),
    "eval": ("pred_csv", "truth_csv"),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="plugsense", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="key=value config file applied before flags")
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command")
    for command, fields in _FIELDS.items():
        p = sub.add_parser(command, help=f"run the {command} stage")
        for name, kind, _default, help_text in fields:
            flag = "--" + name.replace("_", "-")
            if kind == "bool":
                p.add_argument(flag, action=argparse.BooleanOptionalAction, default=None,
                               help=help_text)
            else:
                p.add_argument(flag, default=None, help=help_text)
    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8764)
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {path}")
    out = {}
    for i, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key=value")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _coerce(kind: str, value):
    if isinstance(value, str):
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            return _parse_bool(value)
        if kind == "views":
            return _parse_views(value)
        if kind == "intervals":
            return _parse_intervals(value)
    return value


def _resolve_payload(command: str, args, config: dict) -> dict:
    payload = {}
    for name, kind, default, _help in _FIELDS[command]:
        value = getattr(args, name)
        if value is None and name in config:
            value = config[name]
        if value is None:
            value = default
        if value is None:
            continue
        try:
            payload[name] = _coerce(kind, value)
        except ValueError:
            raise UsageError(f"cannot parse --{name.replace('_', '-')}={value!r}") from None
    missing = [n for n in _REQUIRED[command] if n not in payload]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return payload


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.post(path, json=payload)

    async def go():
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://plugsense.internal", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _exit_code_for(response: httpx.Response) -> int:
    if response.status_code == 422:
        return 1
    try:
        detail = response.json().get("detail")
    except json.JSONDecodeError:
        detail = None
    if isinstance(detail, dict):
        return {"usage": 1, "data": 2, "algorithm": 3}.get(detail.get("kind"), 1)
    return 1


def _print_response(body: dict) -> None:
    for key, value in body.items():
        if value is None:
            continue
        if isinstance(value, float):
            value = f"{value:.6g}"
        print(f"{key}: {value}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    if args.command == "serve":
        import uvicorn

        uvicorn.run("plugsense.service.app:app", host=args.host, port=args.port)
        return 0
    try:
        config = _load_config(args.config)
        payload = _resolve_payload(args.command, args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        response = _post(args.server, f"/{args.command}", payload)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1
    if response.status_code != 200:
        try:
            detail = response.json().get("detail")
        except json.JSONDecodeError:
            detail = response.text
        if isinstance(detail, dict):
            print(f"error ({detail.get('kind')}): {detail.get('message')}", file=sys.stderr)
        else:
            print(f"error: {detail}", file=sys.stderr)
        return _exit_code_for(response)
    _print_response(response.json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
