"""Channel-based storage for concentration streams.

A channel is a named stream with a write key, up to eight fields, and a
minimum write interval (the platform free-plan style rate policy). Accepted
writes go to an append-only JSONL log per channel field and are flushed
before the append returns, so a clean shutdown never loses an accepted
sample. Aggregation and CSV import/export live here too.
"""

from __future__ import annotations

import io
import json
import math
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import (
    BadWriteKey,
    DomainError,
    EmptyChannel,
    ParseError,
    RateLimited,
    StaleTimestamp,
    UnknownChannel,
    UnknownField,
)

MAX_FIELDS = 8
DEFAULT_WRITE_INTERVAL_S = 30.0


def to_iso(ts: float) -> str:
    """Epoch seconds to ISO-8601 UTC (Z suffix)."""
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.isoformat().replace("+00:00", "Z")


def from_iso(text: str) -> float:
    """ISO-8601 timestamp to epoch seconds; naive times are taken as UTC."""
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


@dataclass(frozen=True)
class Channel:
    """Stream definition: identity, write credential, fields and rate policy."""

    id: str
    name: str = ""
    write_key: str = ""
    fields: tuple[str, ...] = ("pm25",)
    min_write_interval: float = DEFAULT_WRITE_INTERVAL_S
    retention_count: int | None = None
    retention_seconds: float | None = None

    def __post_init__(self):
        if self.min_write_interval <= 0:
            raise DomainError("min_write_interval must be > 0")
        if not self.fields or len(self.fields) > MAX_FIELDS:
            raise DomainError(f"channels carry 1..{MAX_FIELDS} fields")
        if len(set(self.fields)) != len(self.fields):
            raise DomainError("field names must be unique")


@dataclass(frozen=True)
class StoredSample:
    entry_id: int
    timestamp: float
    value: float
    sensor_id: str = ""


@dataclass(frozen=True)
class AggregatedPoint:
    """Mean of the samples falling into one aligned time bucket."""

    bucket_start: float
    bucket_width_minutes: float
    mean: float
    count: int


@dataclass
class StationSeries:
    """Reference-station series: hourly points, None where the record is missing."""

    station_name: str
    points: list[tuple[float, float | None]] = field(default_factory=list)

    def present(self) -> list[tuple[float, float]]:
        return [(ts, v) for ts, v in self.points if v is not None]


def aggregate_samples(
    samples: Iterable[StoredSample], bucket_width_minutes: float
) -> list[AggregatedPoint]:
    """Arithmetic mean per aligned bucket; empty buckets are omitted.

    Buckets align to the epoch grid: bucket_start = floor(ts / width) * width.
    """
    if not 1 <= bucket_width_minutes <= 1440:
        raise DomainError("bucket width must be within 1..1440 minutes")
    width_s = bucket_width_minutes * 60.0
    sums: dict[float, list[float]] = {}
    for s in samples:
        start = math.floor(s.timestamp / width_s) * width_s
        acc = sums.setdefault(start, [0.0, 0])
        acc[0] += s.value
        acc[1] += 1
    return [
        AggregatedPoint(start, bucket_width_minutes, total / n, n)
        for start, (total, n) in sorted(sums.items())
    ]


class ChannelStore:
    """Single-node store for channel telemetry.

    Appends across channels may run concurrently; appends within one channel
    are serialized by a per-channel lock. Reads copy under the lock and so
    see a consistent snapshot. The clock is injectable for deterministic
    rate-limit tests.
    """

    def __init__(self, data_dir: str | Path | None = None, clock: Callable[[], float] = time.time):
        self._data_dir = Path(data_dir) if data_dir is not None else None
        self._clock = clock
        self._registry_lock = threading.Lock()
        self._channels: dict[str, Channel] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._samples: dict[tuple[str, str], list[StoredSample]] = {}
        self._last_accept: dict[tuple[str, str], float] = {}
        self._next_entry: dict[str, int] = {}
        self._files: dict[tuple[str, str], io.TextIOWrapper] = {}
        self._closed = False

    # -- channel registry ---------------------------------------------------

    def create_channel(self, channel: Channel) -> None:
        """Register a channel; reloads any previously persisted samples."""
        with self._registry_lock:
            if channel.id in self._channels:
                raise DomainError(f"channel {channel.id!r} already exists")
            self._channels[channel.id] = channel
            self._locks[channel.id] = threading.Lock()
            self._next_entry[channel.id] = 1
            for f in channel.fields:
                self._samples[(channel.id, f)] = []
        if self._data_dir is not None:
            self._load_channel(channel)

    def get_channel(self, channel_id: str) -> Channel:
        try:
            return self._channels[channel_id]
        except KeyError:
            raise UnknownChannel(f"no channel {channel_id!r}") from None

    def channels(self) -> list[Channel]:
        return list(self._channels.values())

    # -- persistence ----------------------------------------------------------

    def _log_path(self, channel_id: str, field_name: str) -> Path:
        assert self._data_dir is not None
        return self._data_dir / channel_id / f"{field_name}.jsonl"

    def _load_channel(self, channel: Channel) -> None:
        max_entry = 0
        for f in channel.fields:
            path = self._log_path(channel.id, f)
            if not path.exists():
                continue
            rows = []
            for line in path.read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                rows.append(
                    StoredSample(rec["entry_id"], rec["ts"], rec["value"], rec.get("sensor_id", ""))
                )
            rows.sort(key=lambda s: s.entry_id)
            self._samples[(channel.id, f)] = rows
            if rows:
                max_entry = max(max_entry, rows[-1].entry_id)
        self._next_entry[channel.id] = max_entry + 1

    def _persist(self, channel_id: str, field_name: str, sample: StoredSample) -> None:
        if self._data_dir is None:
            return
        key = (channel_id, field_name)
        fh = self._files.get(key)
        if fh is None:
            path = self._log_path(channel_id, field_name)
            path.parent.mkdir(parents=True, exist_ok=True)
            fh = open(path, "a", encoding="utf-8")
            self._files[key] = fh
        rec = {
            "entry_id": sample.entry_id,
            "ts": sample.timestamp,
            "value": sample.value,
            "sensor_id": sample.sensor_id,
        }
        fh.write(json.dumps(rec) + "\n")
        fh.flush()
        os.fsync(fh.fileno())

    def snapshot(self, channel_id: str) -> None:
        """Compact a channel's logs to the retained samples, atomically."""
        channel = self.get_channel(channel_id)
        if self._data_dir is None:
            return
        with self._locks[channel_id]:
            for f in channel.fields:
                rows = self._samples[(channel_id, f)]
                fh = self._files.pop((channel_id, f), None)
                if fh is not None:
                    fh.close()
                path = self._log_path(channel_id, f)
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(".jsonl.tmp")
                with open(tmp, "w", encoding="utf-8") as out:
                    for s in rows:
                        out.write(
                            json.dumps(
                                {
                                    "entry_id": s.entry_id,
                                    "ts": s.timestamp,
                                    "value": s.value,
                                    "sensor_id": s.sensor_id,
                                }
                            )
                            + "\n"
                        )
                    out.flush()
                    os.fsync(out.fileno())
                os.replace(tmp, path)

    def close(self) -> None:
        """Flush and release all log handles (clean shutdown)."""
        for fh in self._files.values():
            fh.flush()
            fh.close()
        self._files.clear()
        self._closed = True

    # -- writes ---------------------------------------------------------------

    def append(
        self,
        channel_id: str,
        field_name: str,
        timestamp: float,
        value: float,
        write_key: str = "",
        sensor_id: str = "",
    ) -> int:
        """Store one sample; returns its entry id.

        Rejects with RateLimited (carrying seconds to wait) when the write
        arrives within min_write_interval of the previous accepted write to
        the same channel field, and with StaleTimestamp when the sample does
        not advance the stream.
        """
        channel = self.get_channel(channel_id)
        if field_name not in channel.fields:
            raise UnknownField(f"channel {channel_id!r} has no field {field_name!r}")
        if write_key != channel.write_key:
            raise BadWriteKey(f"bad write key for channel {channel_id!r}")
        key = (channel_id, field_name)
        with self._locks[channel_id]:
            now = self._clock()
            last = self._last_accept.get(key)
            if last is not None:
                elapsed = now - last
                if elapsed < channel.min_write_interval:
                    raise RateLimited(channel.min_write_interval - elapsed)
            rows = self._samples[key]
            if rows and timestamp <= rows[-1].timestamp:
                raise StaleTimestamp(
                    f"timestamp {timestamp} does not advance past {rows[-1].timestamp}"
                )
            entry_id = self._next_entry[channel_id]
            self._next_entry[channel_id] = entry_id + 1
            sample = StoredSample(entry_id, timestamp, value, sensor_id)
            rows.append(sample)
            self._apply_retention(channel, key)
            self._persist(channel_id, field_name, sample)
            self._last_accept[key] = now
            return entry_id

    def _apply_retention(self, channel: Channel, key: tuple[str, str]) -> None:
        rows = self._samples[key]
        if channel.retention_count is not None and len(rows) > channel.retention_count:
            del rows[: len(rows) - channel.retention_count]
        if channel.retention_seconds is not None and rows:
            cutoff = rows[-1].timestamp - channel.retention_seconds
            self._samples[key] = [s for s in rows if s.timestamp >= cutoff]

    # -- reads ----------------------------------------------------------------

    def read(
        self,
        channel_id: str,
        field_name: str,
        start: float | None = None,
        end: float | None = None,
    ) -> list[StoredSample]:
        """Time-ordered samples, optionally restricted to [start, end)."""
        channel = self.get_channel(channel_id)
        if field_name not in channel.fields:
            raise UnknownField(f"channel {channel_id!r} has no field {field_name!r}")
        with self._locks[channel_id]:
            rows = list(self._samples[(channel_id, field_name)])
        if start is not None:
            rows = [s for s in rows if s.timestamp >= start]
        if end is not None:
            rows = [s for s in rows if s.timestamp < end]
        return rows

    def aggregate(
        self, channel_id: str, field_name: str, bucket_width_minutes: float = 60.0
    ) -> list[AggregatedPoint]:
        """Per-bucket means of one channel field (see aggregate_samples)."""
        rows = self.read(channel_id, field_name)
        if not rows:
            raise EmptyChannel(f"channel {channel_id!r} field {field_name!r} is empty")
        return aggregate_samples(rows, bucket_width_minutes)


# -- offline sizing -----------------------------------------------------------


def offline_buffer_capacity(storage_bytes: float, record_size: float, interval_s: float) -> float:
    """Hours of readings a disconnected device can buffer locally.

    floor(storage_bytes / record_size) records, one every interval_s seconds.
    """
    if storage_bytes <= 0 or record_size <= 0 or interval_s <= 0:
        raise DomainError("all arguments must be > 0")
    records = math.floor(storage_bytes / record_size)
    return records * interval_s / 3600.0


# -- CSV import/export ----------------------------------------------------------

DEVICE_CSV_HEADER = "timestamp_iso8601,sensor_id,field,value"
STATION_CSV_HEADER = "timestamp_iso8601,pm25"


def export_csv(store: ChannelStore, channel_id: str) -> str:
    """All samples of a channel in the device CSV schema, oldest first.

    Sensor ids and field names are opaque tokens and must not contain commas.
    """
    channel = store.get_channel(channel_id)
    rows = []
    for f in channel.fields:
        for s in store.read(channel_id, f):
            rows.append((s.timestamp, s.sensor_id, f, s.value))
    rows.sort(key=lambda r: (r[0], r[2]))
    lines = [DEVICE_CSV_HEADER]
    lines.extend(f"{to_iso(ts)},{sensor},{fname},{value!r}" for ts, sensor, fname, value in rows)
    return "\n".join(lines) + "\n"


def parse_device_csv(text: str) -> list[tuple[float, str, str, float]]:
    """Device CSV rows as (timestamp, sensor_id, field, value) tuples."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != DEVICE_CSV_HEADER:
        raise ParseError(1, f"expected header {DEVICE_CSV_HEADER!r}")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(i, f"expected 4 columns, got {len(parts)}")
        try:
            rows.append((from_iso(parts[0]), parts[1], parts[2], float(parts[3])))
        except ValueError as exc:
            raise ParseError(i, str(exc)) from exc
    return rows


def import_device_csv(path: str | Path) -> list[tuple[float, str, str, float]]:
    return parse_device_csv(Path(path).read_text())


def import_station_csv(path: str | Path, station_name: str | None = None) -> StationSeries:
    """Reference-station CSV file: hourly `timestamp_iso8601,pm25`, empty cell = missing."""
    path = Path(path)
    return parse_station_csv(path.read_text(), station_name or path.stem)


def parse_station_csv(text: str, name: str = "station") -> StationSeries:
    lines = text.splitlines()
    if not lines or lines[0].strip() != STATION_CSV_HEADER:
        raise ParseError(1, f"expected header {STATION_CSV_HEADER!r}")
    series = StationSeries(station_name=name)
    last_ts: float | None = None
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(i, f"expected 2 columns, got {len(parts)}")
        try:
            ts = from_iso(parts[0])
            value = None if parts[1].strip() == "" else float(parts[1])
        except ValueError as exc:
            raise ParseError(i, str(exc)) from exc
        if last_ts is not None and ts <= last_ts:
            raise ParseError(i, "timestamps must be strictly increasing")
        last_ts = ts
        series.points.append((ts, value))
    return series


def export_station_csv(series: StationSeries) -> str:
    lines = [STATION_CSV_HEADER]
    for ts, value in series.points:
        lines.append(f"{to_iso(ts)},{'' if value is None else repr(value)}")
    return "\n".join(lines) + "\n"
