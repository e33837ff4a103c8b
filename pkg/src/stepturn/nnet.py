"""Single-hidden-layer network for weighted regression correction.

Logistic hidden units, linear outputs, L2 penalty on all parameters.
Training is deterministic: fixed-seed initialisation scaled by
1/sqrt(fan-in) and full-batch gradient descent with Armijo backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import TrainingDivergedError


@dataclass(frozen=True)
class NetConfig:
    n_hidden: int = 5
    l2: float = 1e-2
    n_iter: int = 10_000
    seed: int = 0
    grad_tol: float = 1e-8  # early stop on gradient inf-norm; deterministic


def init_params(n_in, n_hidden, n_out, seed):
    """Flat parameter vector with N(0, 1/fan_in) weights and zero biases."""
    rng = np.random.default_rng(seed)
    w1 = rng.normal(size=(n_hidden, n_in)) / np.sqrt(n_in)
    b1 = np.zeros(n_hidden)
    w2 = rng.normal(size=(n_out, n_hidden)) / np.sqrt(n_hidden)
    b2 = np.zeros(n_out)
    return pack(w1, b1, w2, b2), (n_in, n_hidden, n_out)


def pack(w1, b1, w2, b2):
    return np.concatenate([w1.ravel(), b1, w2.ravel(), b2])


def unpack(flat, shapes):
    n_in, n_hidden, n_out = shapes
    i = 0
    w1 = flat[i : i + n_hidden * n_in].reshape(n_hidden, n_in)
    i += n_hidden * n_in
    b1 = flat[i : i + n_hidden]
    i += n_hidden
    w2 = flat[i : i + n_out * n_hidden].reshape(n_out, n_hidden)
    i += n_out * n_hidden
    b2 = flat[i : i + n_out]
    return w1, b1, w2, b2


def predict(flat, shapes, x):
    w1, b1, w2, b2 = unpack(flat, shapes)
    hidden = expit(x @ w1.T + b1)
    return hidden @ w2.T + b2


def loss_and_grad(flat, shapes, x, y, sample_weight, l2):
    """Weighted half-MSE plus L2 penalty, with its analytic gradient.

    loss = sum_i w_i ||y_i - f(x_i)||^2 / (2 sum w) + l2/2 * ||params||^2
    """
    w1, b1, w2, b2 = unpack(flat, shapes)
    wsum = float(np.sum(sample_weight))
    if wsum <= 0:
        sample_weight = np.ones(len(x))
        wsum = float(len(x))
    hidden = expit(x @ w1.T + b1)
    out = hidden @ w2.T + b2
    err = out - y
    loss = 0.5 * float(np.sum(sample_weight[:, None] * err**2)) / wsum
    loss += 0.5 * l2 * float(np.sum(flat**2))
    d_out = sample_weight[:, None] * err / wsum
    g_w2 = d_out.T @ hidden + l2 * w2
    g_b2 = d_out.sum(axis=0) + l2 * b2
    d_hidden = (d_out @ w2) * hidden * (1.0 - hidden)
    g_w1 = d_hidden.T @ x + l2 * w1
    g_b1 = d_hidden.sum(axis=0) + l2 * b1
    return loss, pack(g_w1, g_b1, g_w2, g_b2)


def train(x, y, sample_weight, config=None):
    """Fit the network by full-batch gradient descent.

    Backtracking keeps each step a descent step, so the procedure is
    deterministic given the data and config. Stops on the iteration
    budget or when the gradient inf-norm falls below ``grad_tol``.

    Returns (flat_params, shapes).

    Raises
    ------
    TrainingDivergedError
        If the loss becomes non-finite.
    """
    config = config or NetConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    flat, shapes = init_params(x.shape[1], config.n_hidden, y.shape[1], config.seed)
    loss, grad = loss_and_grad(flat, shapes, x, y, sample_weight, config.l2)
    if not np.isfinite(loss):
        raise TrainingDivergedError(0)
    step = 1.0
    for iteration in range(1, config.n_iter + 1):
        gnorm2 = float(grad @ grad)
        if np.sqrt(gnorm2) < config.grad_tol or np.max(np.abs(grad)) < config.grad_tol:
            break
        step = min(step * 2.0, 16.0)
        accepted = False
        for _ in range(60):
            cand = flat - step * grad
            cand_loss, cand_grad = loss_and_grad(
                cand, shapes, x, y, sample_weight, config.l2
            )
            if not np.isfinite(cand_loss):
                raise TrainingDivergedError(iteration)
            if cand_loss <= loss - 1e-4 * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # no descent step representable; gradient effectively zero
        flat, loss, grad = cand, cand_loss, cand_grad
    return flat, shapes
