"""Single-hidden-layer LSTM regressor, implemented directly on numpy.

The cell uses sigmoid gates throughout; the candidate and the cell-state
output nonlinearity are one configurable activation (relu, sigmoid, tanh,
or softmax across the hidden vector). Input is univariate, so each gate
weight matrix is (hidden, hidden + 1): hidden recurrent columns plus one
input column. A dense head maps the final hidden state to the prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit as sigmoid

from ..errors import ShapeMismatch


class Activation(str, Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SOFTMAX = "softmax"

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return np.maximum(x, 0.0)
        if self is Activation.SIGMOID:
            return sigmoid(x)
        if self is Activation.TANH:
            return np.tanh(x)
        # softmax normalizes across the hidden axis (last)
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=-1, keepdims=True)

    def backward(self, upstream: np.ndarray, out: np.ndarray) -> np.ndarray:
        """Gradient through the activation given its output."""
        if self is Activation.RELU:
            return upstream * (out > 0.0)
        if self is Activation.SIGMOID:
            return upstream * out * (1.0 - out)
        if self is Activation.TANH:
            return upstream * (1.0 - out * out)
        # softmax Jacobian: J v = s * (v - <v, s>)
        dot = (upstream * out).sum(axis=-1, keepdims=True)
        return out * (upstream - dot)


@dataclass
class LstmParams:
    """Gate weights (hidden x hidden+1 each), gate biases, and the dense head."""

    w_f: np.ndarray
    w_i: np.ndarray
    w_o: np.ndarray
    w_c: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray
    w_y: np.ndarray
    b_y: np.ndarray  # shape (1,)
    activation: Activation = Activation.TANH

    @property
    def hidden(self) -> int:
        return self.w_f.shape[0]

    def as_list(self) -> list[np.ndarray]:
        """Parameter arrays in canonical order (views, not copies)."""
        return [
            self.w_f, self.w_i, self.w_o, self.w_c,
            self.b_f, self.b_i, self.b_o, self.b_c,
            self.w_y, self.b_y,
        ]

    def copy(self) -> "LstmParams":
        return LstmParams(
            *(a.copy() for a in self.as_list()), activation=self.activation
        )

    def check(self) -> None:
        h = self.hidden
        for w in (self.w_f, self.w_i, self.w_o, self.w_c):
            if w.shape != (h, h + 1):
                raise ShapeMismatch(f"gate weights must be ({h}, {h + 1}), got {w.shape}")
        for b in (self.b_f, self.b_i, self.b_o, self.b_c, self.w_y):
            if b.shape != (h,):
                raise ShapeMismatch(f"expected shape ({h},), got {b.shape}")
        if self.b_y.shape != (1,):
            raise ShapeMismatch(f"b_y must have shape (1,), got {self.b_y.shape}")
        if not all(np.isfinite(a).all() for a in self.as_list()):
            raise ShapeMismatch("parameters must be finite")


def init_params(hidden: int, activation: Activation | str, seed: int = 0) -> LstmParams:
    """Seeded uniform init in +-1/sqrt(hidden); forget gate bias starts at 1."""
    if hidden < 1:
        raise ShapeMismatch("hidden must be >= 1")
    rng = np.random.default_rng(seed)
    k = 1.0 / np.sqrt(hidden)
    shape = (hidden, hidden + 1)
    return LstmParams(
        w_f=rng.uniform(-k, k, shape),
        w_i=rng.uniform(-k, k, shape),
        w_o=rng.uniform(-k, k, shape),
        w_c=rng.uniform(-k, k, shape),
        b_f=np.ones(hidden),  # stabilizes early memory retention
        b_i=np.zeros(hidden),
        b_o=np.zeros(hidden),
        b_c=np.zeros(hidden),
        w_y=rng.uniform(-k, k, hidden),
        b_y=np.zeros(1),
        activation=Activation(activation),
    )


def forward_batch(params: LstmParams, inputs: np.ndarray, want_cache: bool = False):
    """Run the cell across a batch of windows.

    inputs has shape (batch, steps), values already normalized. Returns the
    dense-head predictions (batch,), plus the per-step cache when requested.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2:
        raise ShapeMismatch(f"inputs must be (batch, steps), got {inputs.shape}")
    act = params.activation
    batch, steps = inputs.shape
    h_dim = params.hidden
    h = np.zeros((batch, h_dim))
    c = np.zeros((batch, h_dim))
    cache = []
    for t in range(steps):
        z = np.empty((batch, h_dim + 1))
        z[:, :h_dim] = h
        z[:, h_dim] = inputs[:, t]
        f = sigmoid(z @ params.w_f.T + params.b_f)
        i = sigmoid(z @ params.w_i.T + params.b_i)
        o = sigmoid(z @ params.w_o.T + params.b_o)
        g = act.apply(z @ params.w_c.T + params.b_c)
        c_prev = c
        c = f * c_prev + i * g
        a = act.apply(c)
        h = o * a
        if want_cache:
            cache.append((z, f, i, o, g, c_prev, c, a))
    preds = h @ params.w_y + params.b_y[0]
    if want_cache:
        return preds, (cache, h)
    return preds


def backward_batch(
    params: LstmParams, cache, d_preds: np.ndarray
) -> list[np.ndarray]:
    """Backpropagation through time; gradients in as_list() order."""
    steps_cache, h_last = cache
    act = params.activation
    grads = [np.zeros_like(a) for a in params.as_list()]
    gw_f, gw_i, gw_o, gw_c, gb_f, gb_i, gb_o, gb_c, gw_y, gb_y = grads
    h_dim = params.hidden

    gw_y += h_last.T @ d_preds
    gb_y += d_preds.sum(keepdims=True)
    dh = d_preds[:, None] * params.w_y[None, :]
    dc = np.zeros_like(dh)

    for z, f, i, o, g, c_prev, c, a in reversed(steps_cache):
        do = dh * a
        da = dh * o
        dc = dc + act.backward(da, a)
        d_go = do * o * (1.0 - o)
        d_gf = (dc * c_prev) * f * (1.0 - f)
        d_gi = (dc * g) * i * (1.0 - i)
        d_gg = act.backward(dc * i, g)
        gw_f += d_gf.T @ z
        gw_i += d_gi.T @ z
        gw_o += d_go.T @ z
        gw_c += d_gg.T @ z
        gb_f += d_gf.sum(axis=0)
        gb_i += d_gi.sum(axis=0)
        gb_o += d_go.sum(axis=0)
        gb_c += d_gg.sum(axis=0)
        dz = d_gf @ params.w_f + d_gi @ params.w_i + d_go @ params.w_o + d_gg @ params.w_c
        dh = dz[:, :h_dim]
        dc = dc * f
    return grads


def mse_loss_and_grads(
    params: LstmParams, inputs: np.ndarray, targets: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """Mean-squared-error loss over a batch and its parameter gradients."""
    preds, cache = forward_batch(params, inputs, want_cache=True)
    residual = preds - targets
    loss = float(np.mean(residual**2))
    d_preds = 2.0 * residual / residual.shape[0]
    return loss, backward_batch(params, cache, d_preds)


def lstm_forward(
    params: LstmParams,
    window,
    norm: tuple[float, float] | None = None,
) -> float:
    """Prediction for one window of already-normalized values.

    When norm = (min, max) of the training data is given, the output is
    mapped back to concentration units.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise ShapeMismatch(f"window must be one-dimensional, got {window.shape}")
    params.check()
    pred = float(forward_batch(params, window[None, :])[0])
    if norm is not None:
        lo, hi = norm
        pred = pred * ((hi - lo) or 1.0) + lo
    return pred
