"""Training, evaluation, gradient verification, and hyperparameter sweeps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DivergedLoss, EmptySplit, ShapeMismatch
from .data import WindowedDataset
from .lstm import Activation, LstmParams, forward_batch, init_params, mse_loss_and_grads

MODEL_FORMAT = "pmwatch-forecast"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and split settings. batch_size None trains full-batch."""

    epochs: int = 100
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    train_fraction: float = 0.7
    batch_size: int | None = 32
    seed: int = 0


@dataclass(frozen=True)
class ErrorMetrics:
    """Concentration-scale errors; rmse is always sqrt(mse)."""

    mae: float
    mse: float
    rmse: float


@dataclass
class ForecastModel:
    """Trained parameters plus everything needed to reuse them later."""

    params: LstmParams
    n: int
    norm_min: float
    norm_max: float
    config: TrainConfig
    history: list[float] = field(default_factory=list)

    @property
    def hidden(self) -> int:
        return self.params.hidden

    @property
    def activation(self) -> Activation:
        return self.params.activation

    @property
    def scale(self) -> float:
        return (self.norm_max - self.norm_min) or 1.0

    def denormalize(self, values):
        return values * self.scale + self.norm_min

    def predict(self, window) -> float:
        """Next value, in concentration units, for a raw window of length n."""
        window = np.asarray(window, dtype=np.float64)
        if window.shape != (self.n,):
            raise ShapeMismatch(f"window must have shape ({self.n},), got {window.shape}")
        normalized = (window - self.norm_min) / self.scale
        return float(self.denormalize(forward_batch(self.params, normalized[None, :])[0]))

    def predict_normalized(self, inputs: np.ndarray) -> np.ndarray:
        """Denormalized predictions for already-normalized windows."""
        return self.denormalize(forward_batch(self.params, inputs))


class _Adam:
    """Adaptive-moment optimizer over a list of parameter arrays (in place)."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float, beta2: float, eps: float):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def train(
    dataset: WindowedDataset,
    config: TrainConfig = TrainConfig(),
    hidden: int = 61,
    activation: Activation | str = Activation.SOFTMAX,
) -> ForecastModel:
    """Fit the LSTM to the dataset's training split by MSE.

    Deterministic given (seed, data, config): the seed drives both the
    weight init and the mini-batch shuffle. Raises DivergedLoss with the
    epoch index if the loss stops being finite.
    """
    inputs, targets = dataset.train_split()
    if inputs.shape[0] == 0:
        raise EmptySplit("training split is empty")
    params = init_params(hidden, activation, seed=config.seed)
    opt = _Adam(params.as_list(), config.learning_rate, config.beta1, config.beta2, config.epsilon)
    shuffle_rng = np.random.default_rng(config.seed + 1)
    num = inputs.shape[0]
    batch = num if config.batch_size is None else min(config.batch_size, num)
    history: list[float] = []
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for epoch in range(1, config.epochs + 1):
            order = np.arange(num) if batch == num else shuffle_rng.permutation(num)
            epoch_loss = 0.0
            for lo in range(0, num, batch):
                idx = order[lo : lo + batch]
                loss, grads = mse_loss_and_grads(params, inputs[idx], targets[idx])
                if not np.isfinite(loss):
                    raise DivergedLoss(epoch)
                opt.step(grads)
                epoch_loss += loss * idx.shape[0]
            history.append(epoch_loss / num)
    return ForecastModel(
        params=params,
        n=dataset.n,
        norm_min=dataset.norm_min,
        norm_max=dataset.norm_max,
        config=config,
        history=history,
    )


def error_metrics(predictions, targets) -> ErrorMetrics:
    """MAE/MSE/RMSE between prediction and target arrays (same units)."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ShapeMismatch(f"{predictions.shape} vs {targets.shape}")
    if predictions.size == 0:
        raise EmptySplit("no examples to evaluate")
    residual = predictions - targets
    mse = float(np.mean(residual**2))
    return ErrorMetrics(mae=float(np.mean(np.abs(residual))), mse=mse, rmse=float(np.sqrt(mse)))


def evaluate(model: ForecastModel, inputs: np.ndarray, targets: np.ndarray) -> ErrorMetrics:
    """Metrics on denormalized predictions against denormalized targets."""
    if inputs.shape[0] == 0:
        raise EmptySplit("no examples to evaluate")
    preds = model.predict_normalized(inputs)
    return error_metrics(preds, model.denormalize(targets))


def evaluate_arrays(predictions, targets) -> ErrorMetrics:
    """Alias of error_metrics for callers holding raw prediction arrays."""
    return error_metrics(predictions, targets)


def persistence_predictions(inputs: np.ndarray) -> np.ndarray:
    """Baseline forecaster: repeat the last value of each window."""
    return np.asarray(inputs)[:, -1]


def central_difference(loss_fn, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of loss_fn at theta."""
    grad = np.zeros_like(theta)
    for j in range(theta.size):
        bump = np.zeros_like(theta)
        bump[j] = h
        grad[j] = (loss_fn(theta + bump) - loss_fn(theta - bump)) / (2.0 * h)
    return grad


def _flatten(arrays: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([a.ravel() for a in arrays])


def _unflatten_into(params: LstmParams, theta: np.ndarray) -> None:
    offset = 0
    for a in params.as_list():
        a[...] = theta[offset : offset + a.size].reshape(a.shape)
        offset += a.size


def gradient_check(
    params: LstmParams, inputs: np.ndarray, targets: np.ndarray, h: float = 1e-5
) -> float:
    """Max relative disagreement between backprop and finite differences.

    Relative error per coordinate is |a - f| / max(|a|, |f|, 1e-6); the floor
    keeps finite-difference roundoff on truly zero gradients from
    registering as disagreement. Intended for small models (hidden <= 4).
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    _, grads = mse_loss_and_grads(params, inputs, targets)
    analytic = _flatten(grads)

    work = params.copy()

    def loss_at(theta: np.ndarray) -> float:
        _unflatten_into(work, theta)
        preds = forward_batch(work, inputs)
        return float(np.mean((preds - targets) ** 2))

    numeric = central_difference(loss_at, _flatten(params.as_list()), h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom))


# -- hyperparameter sweep -------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    hidden: int
    activation: Activation
    epochs: int
    seed: int
    metrics: ErrorMetrics | None
    error: str | None = None


def sweep_sort_key(result: SweepResult):
    """Rank by test RMSE; ties fall to fewer epochs, then smaller hidden size."""
    if result.metrics is None:
        return (np.inf, result.epochs, result.hidden)
    return (result.metrics.rmse, result.epochs, result.hidden)


def sweep(
    dataset: WindowedDataset,
    hidden_sizes,
    activations,
    epochs_list,
    seeds=(0,),
    base_config: TrainConfig = TrainConfig(),
) -> list[SweepResult]:
    """Train every (hidden, activation, epochs, seed) cell and rank the results.

    A cell that fails to train is kept in the output with its error message
    instead of aborting the sweep.
    """
    test_inputs, test_targets = dataset.test_split()
    results = []
    for hidden in hidden_sizes:
        for activation in activations:
            for epochs in epochs_list:
                for seed in seeds:
                    cfg = TrainConfig(
                        epochs=epochs,
                        learning_rate=base_config.learning_rate,
                        beta1=base_config.beta1,
                        beta2=base_config.beta2,
                        epsilon=base_config.epsilon,
                        train_fraction=base_config.train_fraction,
                        batch_size=base_config.batch_size,
                        seed=seed,
                    )
                    try:
                        model = train(dataset, cfg, hidden=hidden, activation=activation)
                        metrics = evaluate(model, test_inputs, test_targets)
                        results.append(
                            SweepResult(hidden, Activation(activation), epochs, seed, metrics)
                        )
                    except Exception as exc:  # keep sweeping past bad cells
                        results.append(
                            SweepResult(hidden, Activation(activation), epochs, seed, None, str(exc))
                        )
    results.sort(key=sweep_sort_key)
    return results


def sweep_results_csv(results: list[SweepResult]) -> str:
    lines = ["hidden,activation,epochs,seed,mae,mse,rmse"]
    for r in results:
        if r.metrics is None:
            lines.append(f"{r.hidden},{r.activation.value},{r.epochs},{r.seed},,,")
        else:
            m = r.metrics
            lines.append(
                f"{r.hidden},{r.activation.value},{r.epochs},{r.seed},"
                f"{m.mae!r},{m.mse!r},{m.rmse!r}"
            )
    return "\n".join(lines) + "\n"


# -- model files ------------------------------------------------------------------


def save_model(model: ForecastModel, path: str | Path) -> None:
    """Versioned JSON snapshot: shapes, parameters, norm stats, config, seed."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "hidden": model.hidden,
        "activation": model.activation.value,
        "window": model.n,
        "norm_min": model.norm_min,
        "norm_max": model.norm_max,
        "config": {
            "epochs": model.config.epochs,
            "learning_rate": model.config.learning_rate,
            "beta1": model.config.beta1,
            "beta2": model.config.beta2,
            "epsilon": model.config.epsilon,
            "train_fraction": model.config.train_fraction,
            "batch_size": model.config.batch_size,
            "seed": model.config.seed,
        },
        "history": model.history,
        "params": {
            name: arr.tolist()
            for name, arr in zip(
                ("w_f", "w_i", "w_o", "w_c", "b_f", "b_i", "b_o", "b_c", "w_y", "b_y"),
                model.params.as_list(),
            )
        },
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path: str | Path) -> ForecastModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise ValueError(f"not a {MODEL_FORMAT} v{MODEL_VERSION} file: {path}")
    p = doc["params"]
    params = LstmParams(
        w_f=np.array(p["w_f"], dtype=np.float64),
        w_i=np.array(p["w_i"], dtype=np.float64),
        w_o=np.array(p["w_o"], dtype=np.float64),
        w_c=np.array(p["w_c"], dtype=np.float64),
        b_f=np.array(p["b_f"], dtype=np.float64),
        b_i=np.array(p["b_i"], dtype=np.float64),
        b_o=np.array(p["b_o"], dtype=np.float64),
        b_c=np.array(p["b_c"], dtype=np.float64),
        w_y=np.array(p["w_y"], dtype=np.float64),
        b_y=np.array(p["b_y"], dtype=np.float64),
        activation=Activation(doc["activation"]),
    )
    params.check()
    cfg = doc["config"]
    config = TrainConfig(
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        beta1=cfg["beta1"],
        beta2=cfg["beta2"],
        epsilon=cfg["epsilon"],
        train_fraction=cfg["train_fraction"],
        batch_size=cfg["batch_size"],
        seed=cfg["seed"],
    )
    return ForecastModel(
        params=params,
        n=doc["window"],
        norm_min=doc["norm_min"],
        norm_max=doc["norm_max"],
        config=config,
        history=list(doc["history"]),
    )
