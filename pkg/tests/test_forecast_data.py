import numpy as np
import pytest

from pmwatch.errors import SeriesTooShort
from pmwatch.forecast import make_windows


def test_window_count_is_length_minus_n():
    ds = make_windows(np.arange(12.0), n=9)
    assert ds.num_examples == 3
    assert ds.inputs.shape == (3, 9)


def test_single_window_targets_last_element():
    series = np.arange(10.0)
    ds = make_windows(series, n=9)
    assert ds.num_examples == 1
    assert ds.denormalize(ds.targets[0]) == pytest.approx(series[-1])
    assert np.allclose(ds.denormalize(ds.inputs[0]), series[:9])


def test_windows_slide_by_one():
    series = np.array([5.0, 1.0, 4.0, 2.0, 8.0, 3.0])
    ds = make_windows(series, n=3)
    raw = ds.denormalize(ds.inputs)
    assert np.allclose(raw[0], [5.0, 1.0, 4.0])
    assert np.allclose(raw[1], [1.0, 4.0, 2.0])
    assert np.allclose(ds.denormalize(ds.targets), [2.0, 8.0, 3.0])


def test_constant_series_degenerates_cleanly():
    ds = make_windows(np.full(20, 7.5), n=9)
    assert np.all(ds.inputs == ds.inputs[0, 0])
    assert np.all(ds.targets == ds.targets[0])
    assert ds.scale == 1.0  # collapsed range keeps denormalization finite
    assert ds.denormalize(ds.targets[0]) == pytest.approx(7.5)


def test_series_too_short():
    with pytest.raises(SeriesTooShort):
        make_windows(np.arange(9.0), n=9)


def test_normalization_round_trip():
    rng = np.random.default_rng(5)
    series = rng.uniform(2.0, 40.0, 200)
    ds = make_windows(series, n=9)
    assert np.allclose(ds.denormalize(ds.normalize(series)), series, rtol=1e-12)


def test_training_inputs_land_in_unit_interval():
    rng = np.random.default_rng(6)
    series = rng.uniform(0.0, 55.0, 300)
    ds = make_windows(series, n=9)
    train_inputs, train_targets = ds.train_split()
    assert train_inputs.min() >= 0.0 and train_inputs.max() <= 1.0
    assert train_targets.min() >= 0.0 and train_targets.max() <= 1.0


def test_norm_fitted_on_training_portion_only():
    # spike in the test region must not stretch the training scale
    series = np.concatenate([np.linspace(1.0, 2.0, 100), [50.0], np.linspace(2.0, 1.0, 20)])
    ds = make_windows(series, n=9)
    assert ds.norm_max <= 2.0
    test_inputs, _ = ds.test_split()
    assert test_inputs.max() > 1.0  # the spike normalizes above the unit box


def test_chronological_split():
    series = np.arange(100.0)
    ds = make_windows(series, n=9, train_fraction=0.7)
    assert ds.train_count == int((100 - 9) * 0.7)
    train_inputs, _ = ds.train_split()
    test_inputs, _ = ds.test_split()
    assert ds.denormalize(train_inputs).max() < ds.denormalize(test_inputs).min() + 9
