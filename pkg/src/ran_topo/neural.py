"""Minimal dense neural-network engine.

Everything is float64 numpy: linear layers, ReLU, sigmoid, binary
cross-entropy, Adam, Glorot initialization, and a central-difference
gradient checker. The two model architectures in ran_topo.models own their
backward passes; this module provides the shared pieces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadLabel, ShapeMismatch

BCE_EPS = 1e-12
FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class LinearLayer:
    """Affine map y = W x + b with W of shape (out, in)."""

    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise ShapeMismatch(f"linear layer shapes W{w.shape} b{b.shape}")

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Apply to a vector (in,) or a batch (B, in)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise ShapeMismatch(
                f"input dim {x.shape[-1]} != layer in-dim {self.in_dim}"
            )
        return x @ self.w.T + self.b


def linear_forward(layer: LinearLayer, x: np.ndarray) -> np.ndarray:
    return layer.forward(x)


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_grad(pre):
    # subgradient at exactly 0 is 0
    return (np.asarray(pre) > 0).astype(np.float64)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def bce_loss(p, y):
    """Binary cross-entropy with probabilities clamped to [eps, 1-eps]."""
    y_arr = np.asarray(y, dtype=np.float64)
    if not np.all((y_arr == 0) | (y_arr == 1)):
        raise BadLabel("labels must be 0 or 1")
    p_arr = np.clip(np.asarray(p, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    loss = -(y_arr * np.log(p_arr) + (1.0 - y_arr) * np.log(1.0 - p_arr))
    if loss.ndim == 0:
        return float(loss)
    return loss


def glorot_uniform(rng: np.random.Generator, out_dim: int, in_dim: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-bound, bound, size=(out_dim, in_dim))


@dataclass
class AdamState:
    """Adam moment accumulators keyed like the parameter dict."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns new params, mutates state."""
    state.step += 1
    t = state.step
    new_params = {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} != param {value.shape} ({name})")
        m = state.m.get(name, np.zeros_like(value))
        v = state.v.get(name, np.zeros_like(value))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        new_params[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, state


@dataclass(frozen=True)
class GradCheckReport:
    passed: bool
    worst_rel_error: float
    worst_param: str


def grad_check(
    loss_fn,
    params: dict[str, np.ndarray],
    analytic: dict[str, np.ndarray],
    tolerance: float = 1e-4,
    step: float = FD_STEP,
) -> GradCheckReport:
    """Compare analytic gradients with central finite differences.

    loss_fn maps a parameter dict to a scalar. Every coordinate of every
    parameter is perturbed; relative error is |a - n| / max(1, |a|, |n|).
    A model with no parameters passes vacuously.
    """
    worst = 0.0
    worst_name = ""
    working = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    for name in params:
        flat = working[name].ravel()
        analytic_flat = np.asarray(analytic[name]).ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            up = loss_fn(working)
            flat[idx] = orig - step
            down = loss_fn(working)
            flat[idx] = orig
            numeric = (up - down) / (2.0 * step)
            a = float(analytic_flat[idx])
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if rel > worst:
                worst = rel
                worst_name = f"{name}[{idx}]"
    return GradCheckReport(passed=worst <= tolerance, worst_rel_error=worst, worst_param=worst_name)
