"""Sliding-window supervised dataset over a univariate series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SeriesTooShort

DEFAULT_WINDOW = 9
DEFAULT_TRAIN_FRACTION = 0.7


@dataclass
class WindowedDataset:
    """Supervised view of a series: each example is n consecutive values,
    its target the value that follows. Values are min-max normalized with
    statistics fitted on the training portion only, so the test split never
    leaks into the scale. The split is chronological.
    """

    inputs: np.ndarray   # (num_examples, n), normalized
    targets: np.ndarray  # (num_examples,), normalized
    n: int
    norm_min: float
    norm_max: float
    train_count: int

    @property
    def num_examples(self) -> int:
        return self.inputs.shape[0]

    @property
    def scale(self) -> float:
        # Constant series collapse the range; a unit scale keeps norm finite.
        return (self.norm_max - self.norm_min) or 1.0

    def normalize(self, values: np.ndarray | float) -> np.ndarray | float:
        return (values - self.norm_min) / self.scale

    def denormalize(self, values: np.ndarray | float) -> np.ndarray | float:
        return values * self.scale + self.norm_min

    def train_split(self) -> tuple[np.ndarray, np.ndarray]:
        return self.inputs[: self.train_count], self.targets[: self.train_count]

    def test_split(self) -> tuple[np.ndarray, np.ndarray]:
        return self.inputs[self.train_count :], self.targets[self.train_count :]


def make_windows(
    series,
    n: int = DEFAULT_WINDOW,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
) -> WindowedDataset:
    """Cut a series into len(series) - n windowed examples.

    Example k reads series[k : k+n] and predicts series[k+n]. Normalization
    statistics come from the first train_fraction of examples (including
    their targets), i.e. series[: train_count + n].
    """
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1:
        raise SeriesTooShort("series must be one-dimensional")
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    length = values.shape[0]
    if length <= n:
        raise SeriesTooShort(f"need more than {n} values, got {length}")
    num = length - n
    idx = np.arange(n)[None, :] + np.arange(num)[:, None]
    raw_inputs = values[idx]
    raw_targets = values[n:]
    train_count = int(num * train_fraction)
    seen = values[: train_count + n]
    norm_min = float(seen.min())
    norm_max = float(seen.max())
    scale = (norm_max - norm_min) or 1.0
    return WindowedDataset(
        inputs=(raw_inputs - norm_min) / scale,
        targets=(raw_targets - norm_min) / scale,
        n=n,
        norm_min=norm_min,
        norm_max=norm_max,
        train_count=train_count,
    )
