"""Loss, initialisation and the mini-batch training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import Conv2d, Dense, Recurrent
from .network import Sequential
from .optim import DivergenceError, Optimizer, make_optimizer


def mse_loss(pred, target) -> float:
    """``(1/2N) sum_n [(I_n - I'_n)^2 + (Q_n - Q'_n)^2]``, i.e. the mean over all entries."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} does not match target {target.shape}")
    if pred.size == 0:
        raise ValueError("empty batch")
    return float(np.mean((pred - target) ** 2))


def mse_grad(pred, target) -> np.ndarray:
    """Gradient of :func:`mse_loss` with respect to ``pred``."""
    return 2.0 * (pred - target) / pred.size


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def initialize(net: Sequential, rng: np.random.Generator) -> Sequential:
    """Glorot-uniform weights, zero biases, in layer order."""
    for layer in net.layers:
        if isinstance(layer, Dense):
            fi, fo = layer.W.shape
            layer.W[...] = glorot_uniform(rng, layer.W.shape, fi, fo)
            layer.b[...] = 0.0
        elif isinstance(layer, Conv2d):
            L, R, S = layer.K.shape
            layer.K[...] = glorot_uniform(rng, layer.K.shape, R * S, L * R * S)
            layer.b[...] = 0.0
        elif isinstance(layer, Recurrent):
            n_i, n_hr = layer.Wx.shape
            layer.Wx[...] = glorot_uniform(rng, layer.Wx.shape, n_i, n_hr)
            layer.Wy[...] = glorot_uniform(rng, layer.Wy.shape, n_hr, n_hr)
            layer.b[...] = 0.0
    return net


def loss_and_gradients(net: Sequential, x, y) -> float:
    """Forward, loss and backward on one batch; gradients land in ``net.grads``."""
    pred = net.forward(x)
    loss = mse_loss(pred, y)
    net.zero_grad()
    net.backward(mse_grad(pred, y))
    return loss


@dataclass
class TrainHistory:
    """Per-epoch losses over the whole training (and optional test) set.

    ``initial_train_mse`` is measured before the first update. When the best
    test epoch is retained, ``best_epoch`` is its zero-based index.
    """

    initial_train_mse: float
    train_mse: list = field(default_factory=list)
    test_mse: list = field(default_factory=list)
    best_epoch: int | None = None

    @property
    def final_train_mse(self) -> float:
        return self.train_mse[-1] if self.train_mse else self.initial_train_mse


def _full_mse(net, x, y, batch_size=4096):
    return mse_loss(net.predict(x, batch_size), y)


def train(net: Sequential, inputs, targets, *, epochs: int = 50, batch_size: int = 62,
          optimizer: str | Optimizer = "adam", learning_rate: float = 5e-3, seed: int = 0,
          validation=None, restore_best: bool = True):
    """Mini-batch gradient descent on the MSE loss.

    Each epoch walks a seed-shuffled permutation of the samples in contiguous
    batches, keeping the final partial batch.

    Parameters
    ----------
    net : Sequential
        Trained in place.
    inputs, targets : ndarray
        ``(N, ...)`` network inputs and ``(N, 2)`` targets.
    validation : tuple, optional
        ``(inputs, targets)`` evaluated after every epoch. With
        ``restore_best`` the parameters of the epoch with the lowest
        validation MSE are restored at the end.

    Returns
    -------
    (Sequential, TrainHistory)

    Raises
    ------
    DivergenceError
        If a loss or gradient becomes non-finite; carries the epoch index.
    """
    x = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    N = x.shape[0]
    if N == 0:
        raise ValueError("empty training set")
    if y.shape[0] != N:
        raise ValueError(f"{N} inputs but {y.shape[0]} targets")
    if epochs < 1 or batch_size < 1:
        raise ValueError("epochs and batch_size must be positive")
    opt = make_optimizer(optimizer, learning_rate) if isinstance(optimizer, str) else optimizer
    rng = np.random.default_rng(seed)

    history = TrainHistory(initial_train_mse=_full_mse(net, x, y))
    best = (np.inf, None, None)
    for epoch in range(epochs):
        order = rng.permutation(N)
        for start in range(0, N, batch_size):
            idx = order[start : start + batch_size]
            loss = loss_and_gradients(net, x[idx], y[idx])
            if not np.isfinite(loss):
                raise DivergenceError("diverged", epoch=epoch)
            try:
                opt.step(net.params, net.grads)
            except DivergenceError:
                raise DivergenceError("diverged", epoch=epoch) from None
        train_mse = _full_mse(net, x, y)
        if not np.isfinite(train_mse):
            raise DivergenceError("diverged", epoch=epoch)
        history.train_mse.append(train_mse)
        if validation is not None:
            test_mse = _full_mse(net, *validation)
            history.test_mse.append(test_mse)
            if test_mse < best[0]:
                best = (test_mse, epoch, net.get_flat())
    if validation is not None and restore_best and best[1] is not None:
        net.set_flat(best[2])
        history.best_epoch = best[1]
    return net, history
