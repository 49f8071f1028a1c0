"""Profile-driven sensor simulation.

A profile describes a location's daily concentration shape: a base level,
an optional sinusoidal daily cycle, and gaussian peaks pinned to hours of
the day (e.g. an evening traffic peak). The simulator turns the profile
into the raw readings a sensor would have produced (inverting the
conversion pipeline, with optional pulse-time noise) and then runs those
readings forward through the pipeline, so simulated CSVs carry exactly
what a real device would have reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import sensing
from .errors import ProfileError
from .timeseries import DEVICE_CSV_HEADER, from_iso, to_iso


@dataclass(frozen=True)
class DailyPeak:
    hour: float         # center, hour of day 0-24
    amplitude: float    # ug/m3 at the center
    width_h: float      # gaussian sigma, hours


@dataclass(frozen=True)
class SineCycle:
    amplitude: float = 0.0
    period_h: float = 24.0
    phase_h: float = 6.0  # hour of day where the cycle crosses zero rising


@dataclass(frozen=True)
class SimulationProfile:
    sensor_id: str = "sim"
    start: float = 0.0        # epoch seconds
    hours: float = 24.0
    cadence_s: float = 30.0
    base: float = 10.0        # ug/m3
    sine: SineCycle = SineCycle()
    peaks: tuple[DailyPeak, ...] = ()
    noise: float = 0.0        # multiplicative pulse-time noise amplitude
    field_name: str = "pm25"

    def true_concentration(self, timestamp: float) -> float:
        """Noise-free concentration at one instant; never negative."""
        hod = (timestamp % 86400.0) / 3600.0
        value = self.base
        if self.sine.amplitude:
            value += self.sine.amplitude * np.sin(
                2.0 * np.pi * (hod - self.sine.phase_h) / self.sine.period_h
            )
        for peak in self.peaks:
            # wrap-around distance so peaks near midnight stay symmetric
            d = min(abs(hod - peak.hour), 24.0 - abs(hod - peak.hour))
            value += peak.amplitude * np.exp(-0.5 * (d / peak.width_h) ** 2)
        return max(float(value), 0.0)


def load_profile(path: str | Path) -> SimulationProfile:
    """Profile from JSON; see the repo README for the schema."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProfileError(f"cannot read profile {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProfileError("profile must be a JSON object")
    try:
        start = doc.get("start", 0.0)
        if isinstance(start, str):
            start = from_iso(start)
        sine_doc = doc.get("sine", {})
        peaks = tuple(
            DailyPeak(float(p["hour"]), float(p["amplitude"]), float(p["width_h"]))
            for p in doc.get("peaks", [])
        )
        profile = SimulationProfile(
            sensor_id=str(doc.get("sensor_id", "sim")),
            start=float(start),
            hours=float(doc.get("hours", 24.0)),
            cadence_s=float(doc.get("cadence_s", 30.0)),
            base=float(doc.get("base", 10.0)),
            sine=SineCycle(
                amplitude=float(sine_doc.get("amplitude", 0.0)),
                period_h=float(sine_doc.get("period_h", 24.0)),
                phase_h=float(sine_doc.get("phase_h", 6.0)),
            ),
            peaks=peaks,
            noise=float(doc.get("noise", 0.0)),
            field_name=str(doc.get("field", "pm25")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileError(f"bad profile value: {exc}") from exc
    if profile.hours <= 0 or profile.cadence_s <= 0:
        raise ProfileError("hours and cadence_s must be > 0")
    return profile


@dataclass(frozen=True)
class SimulatedRow:
    timestamp: float
    sensor_id: str
    field_name: str
    value: float


def run_profile(
    profile: SimulationProfile,
    seed: int = 0,
    model: sensing.ParticleModel | None = None,
) -> list[SimulatedRow]:
    """Simulate one deployment; identical seeds give identical rows."""
    model = model or sensing.ParticleModel()
    ticks = int(profile.hours * 3600.0 / profile.cadence_s)
    seed_rng = np.random.default_rng(seed)
    noise_seeds = seed_rng.integers(0, 2**31, size=max(ticks, 1))
    rows = []
    for k in range(ticks):
        ts = profile.start + k * profile.cadence_s
        raw = sensing.simulate_raw(
            profile.true_concentration(ts),
            model=model,
            window=min(profile.cadence_s, sensing.DEFAULT_WINDOW_S),
            timestamp=ts,
            sensor_id=profile.sensor_id,
            noise_amplitude=profile.noise,
            noise_seed=int(noise_seeds[k]),
        )
        sample = sensing.convert(raw, model)
        rows.append(SimulatedRow(ts, profile.sensor_id, profile.field_name, sample.pm25))
    return rows


def rows_to_csv(rows: list[SimulatedRow]) -> str:
    lines = [DEVICE_CSV_HEADER]
    lines.extend(
        f"{to_iso(r.timestamp)},{r.sensor_id},{r.field_name},{r.value!r}" for r in rows
    )
    return "\n".join(lines) + "\n"
