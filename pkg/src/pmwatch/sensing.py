"""DSM501 dust-sensor signal model and conversion to mass concentration.

The sensor reports how long its output was pulled low within a sampling
window (low pulse occupancy). The chain to a PM2.5 mass concentration is:

    occupancy ratio [%]  ->  particle count [pcs/0.01 cf]  ->  mass [ug/m3]

The count comes from the cubic calibration curve of the sensor datasheet;
the mass step assumes spherical particles of fixed density and radius and
rescales the count from 0.01 cubic feet to one cubic meter.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import DomainError, InvalidSample, NotInvertible

# Cubic calibration curve: counts(r) = A3*r^3 + A2*r^2 + A1*r + A0,
# r = occupancy ratio in percent, counts in particles per 0.01 cubic feet.
CURVE_A3 = 1.1
CURVE_A2 = -3.8
CURVE_A1 = 520.0
CURVE_A0 = 0.62

# 1 m^3 = 3531.5 hundredths of a cubic foot.
COUNT_TO_M3 = 3531.5

DEFAULT_WINDOW_S = 30.0
PM25_DENSITY_UG_M3 = 1.65e12
PM25_RADIUS_M = 0.44e-6


@dataclass(frozen=True)
class RawSample:
    """One sensor reading: cumulative low-pulse time within a sampling window."""

    window_duration: float  # seconds, > 0
    low_pulse_time: float   # seconds, within [0, window_duration]
    timestamp: float        # UTC epoch seconds
    sensor_id: str = ""

    def validate(self) -> None:
        if self.window_duration <= 0:
            raise InvalidSample(f"window_duration must be > 0, got {self.window_duration}")
        if not 0 <= self.low_pulse_time <= self.window_duration:
            raise InvalidSample(
                f"low_pulse_time {self.low_pulse_time} outside [0, {self.window_duration}]"
            )


@dataclass(frozen=True)
class ParticleModel:
    """Spherical-particle assumptions used to turn counts into mass.

    density is in ug/m3, radius in meters. volume and unit_mass are derived;
    count_to_m3_factor rescales pcs/0.01 cf to pcs/m3.
    """

    density: float = PM25_DENSITY_UG_M3
    radius: float = PM25_RADIUS_M
    count_to_m3_factor: float = COUNT_TO_M3

    @property
    def volume(self) -> float:
        """Sphere volume in m3."""
        return (4.0 / 3.0) * math.pi * self.radius**3

    @property
    def unit_mass(self) -> float:
        """Mass of a single particle in ug."""
        return self.density * self.volume


@dataclass(frozen=True)
class ConcentrationSample:
    """Timestamped PM2.5 mass concentration with provenance.

    pm10 carries a second size fraction converted with its own particle
    model when one is configured; it is absent by default.
    """

    timestamp: float  # UTC epoch seconds
    pm25: float       # ug/m3, >= 0
    sensor_id: str = ""
    location_label: str = ""
    pm10: float | None = None


def low_ratio(raw: RawSample) -> float:
    """Fraction of the window the signal was low, in percent (0-100)."""
    raw.validate()
    return 100.0 * raw.low_pulse_time / raw.window_duration


def count_concentration(ratio: float) -> float:
    """Particle count concentration (pcs/0.01 cf) from the occupancy ratio.

    Cubic datasheet curve, evaluated in Horner form; strictly increasing
    on 0-100 % so the mapping is invertible.
    """
    if not 0.0 <= ratio <= 100.0:
        raise DomainError(f"ratio {ratio} outside [0, 100]")
    return ((CURVE_A3 * ratio + CURVE_A2) * ratio + CURVE_A1) * ratio + CURVE_A0


def mass_concentration(count: float, model: ParticleModel | None = None) -> float:
    """Mass concentration in ug/m3 for a count in pcs/0.01 cf."""
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}")
    model = model or ParticleModel()
    return count * model.count_to_m3_factor * model.unit_mass


def convert(
    raw: RawSample,
    model: ParticleModel | None = None,
    secondary_model: ParticleModel | None = None,
) -> ConcentrationSample:
    """Full pipeline: raw low-pulse reading to a PM2.5 mass concentration sample.

    A secondary particle model (different radius) converts the same reading
    into a second size fraction, stored on the sample's pm10 slot.
    """
    model = model or ParticleModel()
    count = count_concentration(low_ratio(raw))
    pm25 = mass_concentration(count, model)
    secondary = mass_concentration(count, secondary_model) if secondary_model else None
    return ConcentrationSample(
        timestamp=raw.timestamp, pm25=pm25, sensor_id=raw.sensor_id, pm10=secondary
    )


def pipeline_range(model: ParticleModel | None = None) -> tuple[float, float]:
    """Smallest and largest mass concentration the pipeline can output."""
    model = model or ParticleModel()
    return (
        mass_concentration(count_concentration(0.0), model),
        mass_concentration(count_concentration(100.0), model),
    )


def _ratio_for_mass(target_pm25: float, model: ParticleModel) -> float:
    """Occupancy ratio whose pipeline output equals target_pm25.

    Clamps to 0 below the pipeline minimum; raises NotInvertible above the
    maximum. The cubic is strictly increasing, so a bracketed root is unique.
    """
    lo, hi = pipeline_range(model)
    if target_pm25 <= lo:
        return 0.0
    if target_pm25 > hi:
        raise NotInvertible(f"{target_pm25} ug/m3 exceeds pipeline maximum {hi:.6g}")
    target_count = target_pm25 / (model.count_to_m3_factor * model.unit_mass)
    return brentq(
        lambda r: count_concentration(r) - target_count, 0.0, 100.0, xtol=1e-12, rtol=1e-15
    )


def simulate_raw(
    true_pm25: float,
    model: ParticleModel | None = None,
    window: float = DEFAULT_WINDOW_S,
    timestamp: float = 0.0,
    sensor_id: str = "sim",
    noise_amplitude: float = 0.0,
    noise_seed: int = 0,
) -> RawSample:
    """Raw reading a sensor would produce for a known true concentration.

    Inverts the conversion pipeline, then applies a bounded multiplicative
    perturbation to the pulse time when noise_amplitude > 0. Deterministic
    given the same noise_seed. Concentrations at or below the pipeline
    minimum clamp to zero occupancy.
    """
    if true_pm25 < 0:
        raise DomainError(f"true_pm25 must be >= 0, got {true_pm25}")
    model = model or ParticleModel()
    ratio = _ratio_for_mass(true_pm25, model)
    low_time = window * ratio / 100.0
    if noise_amplitude > 0.0:
        rng = random.Random(noise_seed)
        low_time *= 1.0 + noise_amplitude * rng.uniform(-1.0, 1.0)
        low_time = min(max(low_time, 0.0), window)
    return RawSample(
        window_duration=window,
        low_pulse_time=low_time,
        timestamp=timestamp,
        sensor_id=sensor_id,
    )
