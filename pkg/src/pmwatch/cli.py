"""Operator command line.

Exit codes: 0 success, 1 domain error (bad input, no overlap, empty file),
2 usage error from argparse, 3 comparison tolerance exceeded. Commands never
mutate their input files; anything random takes an explicit --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .aqi import Pollutant, classify_series, load_thresholds
from .errors import PmWatchError
from .forecast import (
    Activation,
    TrainConfig,
    evaluate,
    load_model,
    make_windows,
    save_model,
    sweep,
    sweep_results_csv,
    train,
)
from .sensing import ConcentrationSample
from .service import load_service_config, make_server
from .simulate import load_profile, rows_to_csv, run_profile
from .timeseries import StoredSample, import_device_csv, import_station_csv
from .validation import compare_series, render_text


def _device_rows_to_samples(rows, field_name: str = "pm25") -> list[StoredSample]:
    picked = [r for r in rows if r[2] == field_name]
    return [
        StoredSample(entry_id=i + 1, timestamp=ts, value=value, sensor_id=sensor)
        for i, (ts, sensor, _f, value) in enumerate(picked)
    ]


def _series_from_csv(path: str, field_name: str = "pm25") -> np.ndarray:
    rows = sorted(
        (r for r in import_device_csv(path) if r[2] == field_name), key=lambda r: r[0]
    )
    return np.array([r[3] for r in rows], dtype=np.float64)


def cmd_simulate(args) -> int:
    profile = load_profile(args.profile)
    rows = run_profile(profile, seed=args.seed)
    Path(args.out).write_text(rows_to_csv(rows))
    print(f"wrote {len(rows)} samples to {args.out}")
    return 0


def cmd_compare(args) -> int:
    device = _device_rows_to_samples(import_device_csv(args.device), args.field)
    station = import_station_csv(args.station)
    report = compare_series(device, station, bucket_minutes=args.bucket)
    print(render_text(report))
    if args.json_out:
        Path(args.json_out).write_text(report.to_json())
        print(f"json report written to {args.json_out}")
    if args.tolerance is not None and report.mean_abs_difference > args.tolerance:
        print(
            f"FAIL: mean |delta| {report.mean_abs_difference:.4f} exceeds "
            f"tolerance {args.tolerance}",
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_classify(args) -> int:
    rows = import_device_csv(args.input)
    samples = [
        ConcentrationSample(timestamp=ts, pm25=value, sensor_id=sensor)
        for ts, sensor, f, value in sorted(rows, key=lambda r: r[0])
        if f == args.field
    ]
    thresholds = load_thresholds(args.thresholds) if args.thresholds else None
    cls = classify_series(samples, Pollutant(args.pollutant), thresholds)
    mean = sum(s.pm25 for s in samples) / len(samples)
    print(f"{args.pollutant}: {len(samples)} samples, mean {mean:.3f} ug/m3")
    print(f"air quality: {cls.level.name}")
    print(cls.health_text)
    return 0


def cmd_train(args) -> int:
    series = _series_from_csv(args.input, args.field)
    dataset = make_windows(series, n=args.window, train_fraction=args.train_fraction)
    config = TrainConfig(
        epochs=args.epochs,
        seed=args.seed,
        train_fraction=args.train_fraction,
        batch_size=args.batch_size,
    )
    model = train(dataset, config, hidden=args.hidden, activation=Activation(args.activation))
    save_model(model, args.out)
    metrics = evaluate(model, *dataset.test_split())
    print(f"model written to {args.out}")
    print(f"test MAE {metrics.mae:.4f}  MSE {metrics.mse:.4f}  RMSE {metrics.rmse:.4f}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if args.values:
        window = np.array([float(v) for v in args.values.split(",")])
    else:
        series = _series_from_csv(args.input, args.field)
        window = series[-model.n :]
    print(f"{model.predict(window)!r}")
    return 0


def cmd_sweep(args) -> int:
    series = _series_from_csv(args.input, args.field)
    dataset = make_windows(series, n=args.window, train_fraction=args.train_fraction)
    base = TrainConfig(train_fraction=args.train_fraction, batch_size=args.batch_size)
    results = sweep(
        dataset,
        hidden_sizes=[int(h) for h in args.hidden.split(",")],
        activations=[Activation(a) for a in args.activations.split(",")],
        epochs_list=[int(e) for e in args.epochs.split(",")],
        seeds=[int(s) for s in args.seeds.split(",")],
        base_config=base,
    )
    csv_text = sweep_results_csv(results)
    if args.out:
        Path(args.out).write_text(csv_text)
        print(f"sweep results written to {args.out}")
    else:
        print(csv_text, end="")
    best = results[0]
    if best.metrics is not None:
        print(
            f"best: hidden={best.hidden} activation={best.activation.value} "
            f"epochs={best.epochs} seed={best.seed} rmse={best.metrics.rmse:.4f}"
        )
    return 0


def cmd_serve(args) -> int:
    config = load_service_config(args.config)
    server, service = make_server(config)
    host, port = server.server_address[:2]
    print(f"serving {len(service.store.channels())} channel(s) on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        service.store.close()
    return 0


def cmd_ingest_replay(args) -> int:
    import requests

    rows = sorted(import_device_csv(args.input), key=lambda r: r[0])
    if not rows:
        print("input file holds no samples", file=sys.stderr)
        return 1
    url = f"{args.url.rstrip('/')}/channels/{args.channel}/write"
    accepted = rejected = 0
    previous_ts = None
    for ts, sensor, field_name, value in rows:
        if previous_ts is not None and args.speed > 0:
            time.sleep((ts - previous_ts) / args.speed)
        previous_ts = ts
        body = {
            "write_key": args.write_key,
            "field": field_name,
            "value": value,
            "timestamp": ts,
            "sensor_id": sensor,
        }
        response = requests.post(url, json=body, timeout=10)
        if response.status_code == 200:
            accepted += 1
        else:
            rejected += 1
            if args.verbose:
                print(f"{response.status_code} at {ts}: {response.text}", file=sys.stderr)
    print(f"replayed {len(rows)} rows: {accepted} accepted, {rejected} rejected")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmwatch",
        description="Particulate-matter monitoring toolkit: simulate, ingest, classify, forecast.",
    )
    parser.add_argument("--version", action="version", version=f"pmwatch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a device CSV from a daily profile")
    p.add_argument("--profile", required=True, help="profile JSON path")
    p.add_argument("--out", required=True, help="output device CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare a device CSV against a station CSV")
    p.add_argument("--device", required=True)
    p.add_argument("--station", required=True)
    p.add_argument("--bucket", type=float, default=60.0, help="bucket width, minutes")
    p.add_argument("--field", default="pm25")
    p.add_argument("--tolerance", type=float, default=None,
                   help="exit nonzero when mean |delta| exceeds this")
    p.add_argument("--json-out", default=None, help="also write the JSON report here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("classify", help="air-quality class of a device CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--pollutant", default="pm25",
                   choices=[pol.value for pol in Pollutant])
    p.add_argument("--field", default="pm25")
    p.add_argument("--thresholds", default=None, help="custom threshold table JSON")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("train", help="train the forecaster on a device CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--field", default="pm25")
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--hidden", type=int, default=61)
    p.add_argument("--activation", default="softmax",
                   choices=[a.value for a in Activation])
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="one next-step prediction from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--values", default=None,
                   help="comma-separated window, newest last (default: tail of --input)")
    p.add_argument("--input", default=None, help="device CSV to take the window from")
    p.add_argument("--field", default="pm25")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep", help="grid over hidden size, activation, epochs")
    p.add_argument("--input", required=True)
    p.add_argument("--field", default="pm25")
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--hidden", default="25,61,100", help="comma-separated sizes")
    p.add_argument("--activations", default="relu,sigmoid,tanh,softmax")
    p.add_argument("--epochs", default="100,200,500,1000")
    p.add_argument("--seeds", default="0")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--out", default=None, help="results CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="run the HTTP ingestion service")
    p.add_argument("--config", required=True, help="service config JSON")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ingest-replay", help="stream a device CSV into a running service")
    p.add_argument("--input", required=True)
    p.add_argument("--url", required=True, help="service base URL, e.g. http://127.0.0.1:8100")
    p.add_argument("--channel", required=True)
    p.add_argument("--write-key", default="")
    p.add_argument("--speed", type=float, default=0.0,
                   help="replay speed multiplier; 0 replays as fast as possible")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_ingest_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PmWatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
