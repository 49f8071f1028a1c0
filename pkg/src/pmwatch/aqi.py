"""Air-quality classification against breakpoint tables.

Default tables follow the IEMA (Espirito Santo) index: five ordered classes
per pollutant, each with an averaging window and four ascending breakpoints.
The first band includes both ends; every band above it excludes its lower
bound and includes its upper one, so e.g. 25.0 is GOOD and 25.001 MODERATE
for PM2.5. Alternative jurisdictions load their tables from JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, EmptySeries, NegativeConcentration
from .sensing import ConcentrationSample


class AqiLevel(IntEnum):
    GOOD = 0
    MODERATE = 1
    UNHEALTHY = 2
    VERY_UNHEALTHY = 3
    HAZARDOUS = 4


class Pollutant(str, Enum):
    PM10 = "pm10"
    PM25 = "pm25"
    SO2 = "so2"
    NO2 = "no2"
    O3 = "o3"
    CO = "co"


# Population health-risk descriptions per class; GOOD and MODERATE share one.
_SENSITIVE = "children, the elderly and people with cardiorespiratory diseases"
HEALTH_TEXT: dict[AqiLevel, str] = {
    AqiLevel.GOOD: (
        f"People from sensitive groups ({_SENSITIVE}) may present symptoms such as "
        "dry cough and tiredness. The general population is not affected."
    ),
    AqiLevel.UNHEALTHY: (
        "The entire population may present symptoms such as dry cough, tiredness, "
        "burning eyes, nose and throat. People from sensitive groups "
        f"({_SENSITIVE}) can have more serious health effects."
    ),
    AqiLevel.VERY_UNHEALTHY: (
        "The entire population may present worsening of symptoms such as dry cough, "
        "tiredness, burning eyes, nose and throat, as well as shortness of breath "
        "and wheezing. Even more serious effects on the health of sensitive groups."
    ),
    AqiLevel.HAZARDOUS: (
        "The entire population may be at risk of manifestations of respiratory and "
        "cardiovascular diseases. Increase in premature deaths in people from "
        "sensitive groups."
    ),
}
HEALTH_TEXT[AqiLevel.MODERATE] = HEALTH_TEXT[AqiLevel.GOOD]


@dataclass(frozen=True)
class AqiClass:
    """Classification result: ordered level plus its health-risk description."""

    level: AqiLevel
    health_text: str

    def __lt__(self, other: "AqiClass") -> bool:
        return self.level < other.level

    def __le__(self, other: "AqiClass") -> bool:
        return self.level <= other.level


@dataclass(frozen=True)
class PollutantThresholds:
    """Averaging window and the four ascending class breakpoints of one pollutant."""

    pollutant: Pollutant
    window_hours: float
    boundaries: tuple[float, float, float, float]
    unit: str = "ug/m3"  # CO tables circulate in other unit regimes; kept configurable

    def __post_init__(self):
        if list(self.boundaries) != sorted(self.boundaries) or len(
            set(self.boundaries)
        ) != 4:
            raise ConfigError(f"boundaries must be strictly ascending: {self.boundaries}")
        if self.window_hours <= 0:
            raise ConfigError("window_hours must be > 0")


DEFAULT_THRESHOLDS: dict[Pollutant, PollutantThresholds] = {
    Pollutant.PM10: PollutantThresholds(Pollutant.PM10, 24, (50, 120, 150, 250)),
    Pollutant.PM25: PollutantThresholds(Pollutant.PM25, 24, (25, 60, 125, 210)),
    Pollutant.SO2: PollutantThresholds(Pollutant.SO2, 24, (20, 60, 365, 800)),
    Pollutant.NO2: PollutantThresholds(Pollutant.NO2, 1, (200, 240, 320, 1130)),
    Pollutant.O3: PollutantThresholds(Pollutant.O3, 8, (100, 140, 160, 200)),
    Pollutant.CO: PollutantThresholds(Pollutant.CO, 8, (10_000, 13_000, 15_000, 17_000)),
}


def classify(
    pollutant: Pollutant | str,
    concentration: float,
    thresholds: dict[Pollutant, PollutantThresholds] | None = None,
) -> AqiClass:
    """Classify one concentration value into its air-quality class."""
    if concentration < 0:
        raise NegativeConcentration(f"concentration must be >= 0, got {concentration}")
    pollutant = Pollutant(pollutant)
    table = (thresholds or DEFAULT_THRESHOLDS)[pollutant]
    level = AqiLevel.HAZARDOUS
    for lvl, bound in zip(AqiLevel, table.boundaries):
        if concentration <= bound:
            level = lvl
            break
    return AqiClass(level=level, health_text=HEALTH_TEXT[level])


def classify_series(
    samples: Sequence[ConcentrationSample] | Iterable[ConcentrationSample],
    pollutant: Pollutant | str = Pollutant.PM25,
    thresholds: dict[Pollutant, PollutantThresholds] | None = None,
) -> AqiClass:
    """Classify the mean concentration over the pollutant's averaging window.

    Samples must be time-ordered; the mean is taken over the trailing
    window ending at the newest sample.
    """
    samples = list(samples)
    if not samples:
        raise EmptySeries("cannot classify an empty series")
    pollutant = Pollutant(pollutant)
    table = (thresholds or DEFAULT_THRESHOLDS)[pollutant]
    window_s = table.window_hours * 3600.0
    cutoff = samples[-1].timestamp - window_s
    values = [s.pm25 for s in samples if s.timestamp > cutoff]
    mean = sum(values) / len(values)
    return classify(pollutant, mean, thresholds)


def load_thresholds(path: str | Path) -> dict[Pollutant, PollutantThresholds]:
    """Load a jurisdiction's threshold tables from JSON.

    Schema: {"pm25": {"window_hours": 24, "boundaries": [25, 60, 125, 210],
    "unit": "ug/m3"}, ...}. Pollutants absent from the file keep the defaults.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read threshold file {path}: {exc}") from exc
    tables = dict(DEFAULT_THRESHOLDS)
    for key, entry in data.items():
        try:
            pollutant = Pollutant(key)
            boundaries = tuple(float(b) for b in entry["boundaries"])
            if len(boundaries) != 4:
                raise ConfigError(f"{key}: need exactly 4 boundaries")
            tables[pollutant] = PollutantThresholds(
                pollutant=pollutant,
                window_hours=float(entry["window_hours"]),
                boundaries=boundaries,
                unit=str(entry.get("unit", "ug/m3")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad threshold entry for {key!r}: {exc}") from exc
    return tables
