"""Predictive alerting: classify the forecast and flag it when it crosses a bar."""

from __future__ import annotations

from dataclasses import dataclass

from ..aqi import AqiLevel, Pollutant, classify
from .training import ForecastModel


@dataclass(frozen=True)
class Alert:
    level: AqiLevel
    predicted: float
    health_text: str


def predictive_alert(
    model: ForecastModel,
    recent_window,
    min_level: AqiLevel = AqiLevel.MODERATE,
    pollutant: Pollutant | str = Pollutant.PM25,
    thresholds=None,
) -> Alert | None:
    """Forecast the next value and alert when its class reaches min_level.

    Negative forecasts count as zero concentration. Returns None when the
    predicted class stays below the bar.
    """
    predicted = model.predict(recent_window)
    cls = classify(pollutant, max(predicted, 0.0), thresholds)
    if cls.level >= min_level:
        return Alert(level=cls.level, predicted=predicted, health_text=cls.health_text)
    return None
