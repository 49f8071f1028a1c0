import json
import math

import numpy as np
import pytest

from pmwatch.aqi import (
    DEFAULT_THRESHOLDS,
    AqiLevel,
    Pollutant,
    classify,
    classify_series,
    load_thresholds,
)
from pmwatch.errors import ConfigError, EmptySeries, NegativeConcentration
from pmwatch.sensing import ConcentrationSample

LEVELS = list(AqiLevel)


def constant_series(value, count=24, spacing=3600.0):
    return [
        ConcentrationSample(timestamp=k * spacing, pm25=value, sensor_id="t")
        for k in range(count)
    ]


def test_moderate_band_for_daily_mean_anchor():
    assert classify(Pollutant.PM25, 28.745).level is AqiLevel.MODERATE


def test_first_band_upper_bound_is_inclusive():
    assert classify(Pollutant.PM25, 25.0).level is AqiLevel.GOOD


def test_zero_is_good():
    assert classify(Pollutant.PM25, 0.0).level is AqiLevel.GOOD


def test_above_last_breakpoint_is_hazardous():
    assert classify(Pollutant.PM25, 210.01).level is AqiLevel.HAZARDOUS


def test_negative_concentration_rejected():
    with pytest.raises(NegativeConcentration):
        classify(Pollutant.PM25, -0.1)


@pytest.mark.parametrize("pollutant", list(Pollutant))
def test_breakpoints_give_adjacent_classes(pollutant):
    bounds = DEFAULT_THRESHOLDS[pollutant].boundaries
    for i, bound in enumerate(bounds):
        assert classify(pollutant, bound).level == LEVELS[i]
        just_above = math.nextafter(bound, math.inf)
        assert classify(pollutant, just_above).level == LEVELS[i + 1]


@pytest.mark.parametrize("pollutant", list(Pollutant))
def test_every_concentration_maps_to_exactly_one_class(pollutant):
    rng = np.random.default_rng(1)
    top = DEFAULT_THRESHOLDS[pollutant].boundaries[-1]
    for c in rng.uniform(0.0, top * 1.5, 300):
        cls = classify(pollutant, float(c))
        assert cls.level in LEVELS
        assert cls.health_text


def test_classification_is_monotonic():
    rng = np.random.default_rng(2)
    values = np.sort(rng.uniform(0.0, 300.0, 200))
    classes = [classify(Pollutant.PM25, float(v)) for v in values]
    assert all(a <= b for a, b in zip(classes, classes[1:]))


def test_good_and_moderate_share_health_text():
    assert classify(Pollutant.PM25, 1.0).health_text == classify(Pollutant.PM25, 30.0).health_text
    texts = {classify(Pollutant.PM25, c).health_text for c in (1.0, 30.0, 100.0, 150.0, 300.0)}
    assert len(texts) == 4  # five classes, four distinct descriptions


def test_series_good_regime_anchor():
    assert classify_series(constant_series(3.920)).level is AqiLevel.GOOD


def test_series_good_near_band_edge_anchor():
    assert classify_series(constant_series(17.178)).level is AqiLevel.GOOD


def test_series_single_sample_mean():
    assert classify_series(constant_series(300.0, count=1)).level is AqiLevel.HAZARDOUS


def test_series_uses_trailing_window_only():
    # huge values older than the 24 h PM2.5 window must not contaminate the mean
    old = constant_series(500.0, count=4, spacing=3600.0)
    recent = [
        ConcentrationSample(timestamp=200_000.0 + k * 3600.0, pm25=10.0) for k in range(24)
    ]
    assert classify_series(old + recent).level is AqiLevel.GOOD


def test_series_empty_rejected():
    with pytest.raises(EmptySeries):
        classify_series([])


def test_thresholds_loadable_from_json(tmp_path):
    path = tmp_path / "thresholds.json"
    path.write_text(
        json.dumps({"pm25": {"window_hours": 24, "boundaries": [10, 20, 30, 40]}})
    )
    tables = load_thresholds(path)
    assert classify(Pollutant.PM25, 15.0, tables).level is AqiLevel.MODERATE
    # untouched pollutants keep their defaults
    assert tables[Pollutant.O3] == DEFAULT_THRESHOLDS[Pollutant.O3]


def test_thresholds_bad_file_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"pm25": {"window_hours": 24, "boundaries": [40, 20, 30]}}))
    with pytest.raises(ConfigError):
        load_thresholds(path)


def test_co_table_keeps_its_unit_label():
    assert DEFAULT_THRESHOLDS[Pollutant.CO].boundaries == (10_000, 13_000, 15_000, 17_000)
    assert DEFAULT_THRESHOLDS[Pollutant.CO].unit
