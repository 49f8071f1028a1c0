"""Device-versus-reference-station comparison.

Device samples are averaged into aligned buckets (hourly by default) and
matched against the station's hourly record. Deltas exist only where both
sides have a value; hours the station failed to record are carried through
as gap markers rather than zeros.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .aqi import AqiClass, Pollutant, classify
from .errors import NoOverlap
from .timeseries import StationSeries, StoredSample, aggregate_samples, to_iso


@dataclass(frozen=True)
class ComparisonPoint:
    timestamp: float
    device_mean: float | None
    station: float | None
    delta: float | None          # device - station where both present
    station_missing: bool = False


@dataclass
class ComparisonReport:
    bucket_minutes: float
    points: list[ComparisonPoint]
    mean_abs_difference: float
    matched_count: int
    gap_count: int
    device_mean: float
    station_mean: float
    device_class: AqiClass
    station_class: AqiClass

    def to_json_dict(self) -> dict:
        """Stable machine-readable form of the report."""
        return {
            "bucket_minutes": self.bucket_minutes,
            "mean_abs_difference": self.mean_abs_difference,
            "matched_count": self.matched_count,
            "gap_count": self.gap_count,
            "device": {"mean": self.device_mean, "aqi_level": self.device_class.level.name},
            "station": {"mean": self.station_mean, "aqi_level": self.station_class.level.name},
            "points": [
                {
                    "timestamp": to_iso(p.timestamp),
                    "device_mean": p.device_mean,
                    "station": p.station,
                    "delta": p.delta,
                    "station_missing": p.station_missing,
                }
                for p in self.points
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


def compare_series(
    device_samples: list[StoredSample],
    station: StationSeries,
    bucket_minutes: float = 60.0,
    pollutant: Pollutant | str = Pollutant.PM25,
) -> ComparisonReport:
    """Match bucketed device means against station points and measure the gap."""
    buckets = {b.bucket_start: b for b in aggregate_samples(device_samples, bucket_minutes)}
    station_at = dict(station.points)
    timestamps = sorted(set(buckets) | {ts for ts, _ in station.points})
    points: list[ComparisonPoint] = []
    deltas: list[float] = []
    gaps = 0
    for ts in timestamps:
        bucket = buckets.get(ts)
        device_mean = bucket.mean if bucket else None
        in_station = ts in station_at
        station_value = station_at.get(ts)
        missing = in_station and station_value is None
        if missing:
            gaps += 1
        delta = None
        if device_mean is not None and station_value is not None:
            delta = device_mean - station_value
            deltas.append(delta)
        points.append(ComparisonPoint(ts, device_mean, station_value, delta, missing))
    if not deltas:
        raise NoOverlap("device and station series share no populated hours")
    device_values = [b.mean for b in buckets.values()]
    station_values = [v for _, v in station.points if v is not None]
    device_mean = sum(device_values) / len(device_values)
    station_mean = sum(station_values) / len(station_values) if station_values else 0.0
    return ComparisonReport(
        bucket_minutes=bucket_minutes,
        points=points,
        mean_abs_difference=sum(abs(d) for d in deltas) / len(deltas),
        matched_count=len(deltas),
        gap_count=gaps,
        device_mean=device_mean,
        station_mean=station_mean,
        device_class=classify(pollutant, max(device_mean, 0.0)),
        station_class=classify(pollutant, max(station_mean, 0.0)),
    )


def render_text(report: ComparisonReport) -> str:
    """Human-readable comparison table."""
    lines = [
        f"{'hour (UTC)':<22}{'device':>10}{'station':>10}{'delta':>10}",
        "-" * 52,
    ]
    for p in report.points:
        device = f"{p.device_mean:.3f}" if p.device_mean is not None else "-"
        if p.station_missing:
            station, delta = "MISSING", "-"
        else:
            station = f"{p.station:.3f}" if p.station is not None else "-"
            delta = f"{p.delta:+.3f}" if p.delta is not None else "-"
        lines.append(f"{to_iso(p.timestamp):<22}{device:>10}{station:>10}{delta:>10}")
    lines.append("-" * 52)
    lines.append(
        f"matched hours: {report.matched_count}   station gaps: {report.gap_count}   "
        f"mean |delta|: {report.mean_abs_difference:.4f} ug/m3"
    )
    lines.append(
        f"device mean {report.device_mean:.3f} ({report.device_class.level.name})  "
        f"station mean {report.station_mean:.3f} ({report.station_class.level.name})"
    )
    return "\n".join(lines)
