"""HTTP ingestion layer in front of the channel store.

Wire contract (JSON bodies, fixed field names):

  POST /channels/{id}/write
      {"write_key": str, "field": str, "value": float}            value write
      {"write_key": str, "field": str,
       "lpo": {"window_s": float, "low_s": float}}                raw-reading write
      optional: "timestamp" (epoch seconds), "sensor_id"
      200 {"entry_id": int} | 400 malformed | 401 bad key
      | 404 unknown channel/field | 429 rate limited (Retry-After header,
      body {"retry_after": seconds})

  GET /channels/{id}/feed?field=pm25&start=&end=&bucket=
      200 {"channel", "field", "samples": [{"timestamp", "value",
      "sensor_id", "entry_id"}]} -- or, with bucket (minutes),
      {"buckets": [{"bucket_start", "bucket_width_minutes", "mean", "count"}]}

  GET /channels/{id}/aqi?field=pm25&pollutant=pm25
      200 {"pollutant", "level", "mean", "health_text", "window_hours"}
      | 409 when the field holds no samples

The transport-agnostic request handling lives on IngestService so tests can
drive it without sockets; rate limiting uses the store's injectable clock.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass, field as dataclass_field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable
from urllib.parse import parse_qs, urlparse

from . import sensing
from .aqi import DEFAULT_THRESHOLDS, Pollutant, classify
from .errors import (
    BadWriteKey,
    ConfigError,
    DomainError,
    EmptyChannel,
    InvalidSample,
    RateLimited,
    StaleTimestamp,
    UnknownChannel,
    UnknownField,
)
from .timeseries import Channel, ChannelStore, aggregate_samples

DEFAULT_BIND = "127.0.0.1"
DEFAULT_PORT = 8100
ENV_PREFIX = "PMWATCH_"


@dataclass
class ServiceConfig:
    bind: str = DEFAULT_BIND
    port: int = DEFAULT_PORT
    data_dir: str | None = None
    channels: list[Channel] = dataclass_field(default_factory=list)


def load_service_config(path: str | Path, env: dict | None = None) -> ServiceConfig:
    """Service config from JSON, with PMWATCH_BIND/PORT/DATA_DIR overrides."""
    env = os.environ if env is None else env
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read service config {path}: {exc}") from exc
    try:
        channels = [
            Channel(
                id=c["id"],
                name=c.get("name", ""),
                write_key=c.get("write_key", ""),
                fields=tuple(c.get("fields", ("pm25",))),
                min_write_interval=float(c.get("min_write_interval", 30.0)),
                retention_count=c.get("retention_count"),
                retention_seconds=c.get("retention_seconds"),
            )
            for c in doc.get("channels", [])
        ]
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise ConfigError(f"bad channel definition: {exc}") from exc
    return ServiceConfig(
        bind=env.get(ENV_PREFIX + "BIND", doc.get("bind", DEFAULT_BIND)),
        port=int(env.get(ENV_PREFIX + "PORT", doc.get("port", DEFAULT_PORT))),
        data_dir=env.get(ENV_PREFIX + "DATA_DIR", doc.get("data_dir")),
        channels=channels,
    )


class IngestService:
    """Request handling over a ChannelStore, independent of the transport."""

    def __init__(
        self,
        store: ChannelStore,
        particle_model: sensing.ParticleModel | None = None,
        clock: Callable[[], float] | None = None,
    ):
        self.store = store
        self.particle_model = particle_model or sensing.ParticleModel()
        self.clock = clock or time.time

    # Responses are (status, payload, headers) triples.

    def handle_write(self, channel_id: str, body) -> tuple[int, dict, dict]:
        if not isinstance(body, dict):
            return 400, {"error": "body must be a JSON object"}, {}
        field_name = body.get("field")
        if not isinstance(field_name, str):
            return 400, {"error": "missing field name"}, {}
        has_value = "value" in body
        has_lpo = "lpo" in body
        if has_value == has_lpo:
            return 400, {"error": "exactly one of value/lpo must be present"}, {}
        timestamp = body.get("timestamp", self.clock())
        if not isinstance(timestamp, (int, float)):
            return 400, {"error": "timestamp must be numeric"}, {}
        sensor_id = str(body.get("sensor_id", ""))
        if has_value:
            value = body["value"]
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                return 400, {"error": "value must be a finite number"}, {}
        else:
            lpo = body["lpo"]
            if not isinstance(lpo, dict) or not {"window_s", "low_s"} <= lpo.keys():
                return 400, {"error": "lpo needs window_s and low_s"}, {}
            try:
                raw = sensing.RawSample(
                    window_duration=float(lpo["window_s"]),
                    low_pulse_time=float(lpo["low_s"]),
                    timestamp=float(timestamp),
                    sensor_id=sensor_id,
                )
                value = sensing.convert(raw, self.particle_model).pm25
            except (InvalidSample, TypeError, ValueError) as exc:
                return 400, {"error": f"bad lpo payload: {exc}"}, {}
        try:
            entry_id = self.store.append(
                channel_id,
                field_name,
                timestamp=float(timestamp),
                value=float(value),
                write_key=str(body.get("write_key", "")),
                sensor_id=sensor_id,
            )
        except UnknownChannel as exc:
            return 404, {"error": str(exc)}, {}
        except UnknownField as exc:
            return 404, {"error": str(exc)}, {}
        except BadWriteKey as exc:
            return 401, {"error": str(exc)}, {}
        except RateLimited as exc:
            return (
                429,
                {"error": "rate limited", "retry_after": exc.retry_after},
                {"Retry-After": str(math.ceil(exc.retry_after))},
            )
        except StaleTimestamp as exc:
            return 400, {"error": str(exc)}, {}
        return 200, {"entry_id": entry_id}, {}

    def handle_feed(self, channel_id: str, query: dict) -> tuple[int, dict, dict]:
        field_name = query.get("field", "pm25")
        start = float(query["start"]) if "start" in query else None
        end = float(query["end"]) if "end" in query else None
        try:
            rows = self.store.read(channel_id, field_name, start=start, end=end)
        except (UnknownChannel, UnknownField) as exc:
            return 404, {"error": str(exc)}, {}
        payload: dict = {"channel": channel_id, "field": field_name}
        if "bucket" in query:
            try:
                buckets = aggregate_samples(rows, float(query["bucket"]))
            except DomainError as exc:
                return 400, {"error": str(exc)}, {}
            payload["buckets"] = [
                {
                    "bucket_start": b.bucket_start,
                    "bucket_width_minutes": b.bucket_width_minutes,
                    "mean": b.mean,
                    "count": b.count,
                }
                for b in buckets
            ]
        else:
            payload["samples"] = [
                {
                    "timestamp": s.timestamp,
                    "value": s.value,
                    "sensor_id": s.sensor_id,
                    "entry_id": s.entry_id,
                }
                for s in rows
            ]
        return 200, payload, {}

    def handle_aqi(self, channel_id: str, query: dict) -> tuple[int, dict, dict]:
        field_name = query.get("field", "pm25")
        pollutant = Pollutant(query.get("pollutant", "pm25"))
        try:
            rows = self.store.read(channel_id, field_name)
        except (UnknownChannel, UnknownField) as exc:
            return 404, {"error": str(exc)}, {}
        if not rows:
            return 409, {"error": f"channel {channel_id!r} field {field_name!r} is empty"}, {}
        window_hours = DEFAULT_THRESHOLDS[pollutant].window_hours
        cutoff = rows[-1].timestamp - window_hours * 3600.0
        values = [s.value for s in rows if s.timestamp > cutoff]
        mean = sum(values) / len(values)
        cls = classify(pollutant, max(mean, 0.0))
        return (
            200,
            {
                "pollutant": pollutant.value,
                "level": cls.level.name,
                "mean": mean,
                "window_hours": window_hours,
                "health_text": cls.health_text,
            },
            {},
        )


class _Handler(BaseHTTPRequestHandler):
    service: IngestService  # set by make_server

    def _respond(self, status: int, payload: dict, headers: dict) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        for name, value in headers.items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:  # noqa: N802 (stdlib naming)
        parts = urlparse(self.path).path.strip("/").split("/")
        if len(parts) == 3 and parts[0] == "channels" and parts[2] == "write":
            length = int(self.headers.get("Content-Length", 0))
            try:
                body = json.loads(self.rfile.read(length) or b"")
            except json.JSONDecodeError:
                self._respond(400, {"error": "body is not valid JSON"}, {})
                return
            self._respond(*self.service.handle_write(parts[1], body))
        else:
            self._respond(404, {"error": "no such route"}, {})

    def do_GET(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        parts = url.path.strip("/").split("/")
        query = {k: v[-1] for k, v in parse_qs(url.query).items()}
        if len(parts) == 3 and parts[0] == "channels":
            if parts[2] == "feed":
                self._respond(*self.service.handle_feed(parts[1], query))
                return
            if parts[2] == "aqi":
                try:
                    self._respond(*self.service.handle_aqi(parts[1], query))
                except ValueError as exc:
                    self._respond(400, {"error": str(exc)}, {})
                return
        self._respond(404, {"error": "no such route"}, {})

    def log_message(self, fmt, *args):  # keep test output quiet
        pass


def make_server(
    config: ServiceConfig,
    store: ChannelStore | None = None,
    clock: Callable[[], float] = time.time,
) -> tuple[ThreadingHTTPServer, IngestService]:
    """Build the HTTP server (unstarted) and its service facade."""
    if store is None:
        store = ChannelStore(config.data_dir, clock=clock)
        for channel in config.channels:
            store.create_channel(channel)
    service = IngestService(store, clock=clock)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((config.bind, config.port), handler)
    return server, service


def start_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
