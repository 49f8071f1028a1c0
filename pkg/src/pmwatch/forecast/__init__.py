"""Next-step concentration forecasting with a single-hidden-layer LSTM."""

from .data import WindowedDataset, make_windows
from .lstm import Activation, LstmParams, init_params, lstm_forward
from .training import (
    ErrorMetrics,
    ForecastModel,
    SweepResult,
    TrainConfig,
    error_metrics,
    evaluate,
    evaluate_arrays,
    gradient_check,
    load_model,
    persistence_predictions,
    save_model,
    sweep,
    sweep_results_csv,
    train,
)
from .alerts import Alert, predictive_alert

__all__ = [
    "Activation",
    "Alert",
    "ErrorMetrics",
    "ForecastModel",
    "LstmParams",
    "SweepResult",
    "TrainConfig",
    "WindowedDataset",
    "error_metrics",
    "evaluate",
    "evaluate_arrays",
    "gradient_check",
    "init_params",
    "load_model",
    "lstm_forward",
    "make_windows",
    "persistence_predictions",
    "predictive_alert",
    "save_model",
    "sweep",
    "sweep_results_csv",
    "train",
]
