"""
First-order optimizers.

All five follow their standard published update rules with these constants:

========  =====================================================================
sgd       ``p -= lr * g``
adam      ``beta1=0.9, beta2=0.999, eps=1e-8``, bias-corrected moments
rmsprop   ``rho=0.9, eps=1e-8``; ``p -= lr * g / (sqrt(E[g^2]) + eps)``
adadelta  ``rho=0.95, eps=1e-6``; the unit-corrected step is scaled by ``lr``
adamax    ``beta1=0.9, beta2=0.999, eps=1e-8``; infinity-norm second moment
========  =====================================================================

Every update is linear in ``lr``, so a step vanishes as ``lr -> 0``.
"""

from __future__ import annotations

import numpy as np

OPTIMIZERS = ("sgd", "adam", "rmsprop", "adadelta", "adamax")


class DivergenceError(FloatingPointError):
    """Training produced a non-finite gradient or loss."""

    def __init__(self, message="diverged", epoch=None):
        if epoch is not None:
            message = f"{message} at epoch {epoch}"
        super().__init__(message)
        self.epoch = epoch


class Optimizer:
    """Base class holding the per-parameter accumulators and a step counter."""

    kind = "base"

    def __init__(self, learning_rate: float):
        if not learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        self.learning_rate = float(learning_rate)
        self.t = 0
        self.state: list[dict] | None = None

    def _init_state(self, params):
        return [{} for _ in params]

    def step(self, params, grads):
        """Update ``params`` in place from ``grads``."""
        if len(params) != len(grads):
            raise ValueError("parameter and gradient lists differ in length")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
            if not np.all(np.isfinite(g)):
                raise DivergenceError("diverged")
        if self.state is None:
            self.state = self._init_state(params)
        self.t += 1
        for p, g, s in zip(params, grads, self.state):
            self._update(p, g, s)

    def _update(self, p, g, s):
        raise NotImplementedError


class SGD(Optimizer):
    kind = "sgd"

    def _update(self, p, g, s):
        p -= self.learning_rate * g


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(learning_rate)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def _init_state(self, params):
        return [{"m": np.zeros_like(p), "v": np.zeros_like(p)} for p in params]

    def _update(self, p, g, s):
        s["m"] = self.beta1 * s["m"] + (1 - self.beta1) * g
        s["v"] = self.beta2 * s["v"] + (1 - self.beta2) * g * g
        m_hat = s["m"] / (1 - self.beta1 ** self.t)
        v_hat = s["v"] / (1 - self.beta2 ** self.t)
        p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


class RMSprop(Optimizer):
    kind = "rmsprop"

    def __init__(self, learning_rate=1e-3, rho=0.9, eps=1e-8):
        super().__init__(learning_rate)
        self.rho, self.eps = rho, eps

    def _init_state(self, params):
        return [{"sq": np.zeros_like(p)} for p in params]

    def _update(self, p, g, s):
        s["sq"] = self.rho * s["sq"] + (1 - self.rho) * g * g
        p -= self.learning_rate * g / (np.sqrt(s["sq"]) + self.eps)


class Adadelta(Optimizer):
    kind = "adadelta"

    def __init__(self, learning_rate=1.0, rho=0.95, eps=1e-6):
        super().__init__(learning_rate)
        self.rho, self.eps = rho, eps

    def _init_state(self, params):
        return [{"sq": np.zeros_like(p), "dx": np.zeros_like(p)} for p in params]

    def _update(self, p, g, s):
        s["sq"] = self.rho * s["sq"] + (1 - self.rho) * g * g
        delta = np.sqrt(s["dx"] + self.eps) / np.sqrt(s["sq"] + self.eps) * g
        s["dx"] = self.rho * s["dx"] + (1 - self.rho) * delta * delta
        p -= self.learning_rate * delta


class Adamax(Optimizer):
    kind = "adamax"

    def __init__(self, learning_rate=2e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(learning_rate)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def _init_state(self, params):
        return [{"m": np.zeros_like(p), "u": np.zeros_like(p)} for p in params]

    def _update(self, p, g, s):
        s["m"] = self.beta1 * s["m"] + (1 - self.beta1) * g
        s["u"] = np.maximum(self.beta2 * s["u"], np.abs(g))
        p -= (self.learning_rate / (1 - self.beta1 ** self.t)) * s["m"] / (s["u"] + self.eps)


_CLASSES = {cls.kind: cls for cls in (SGD, Adam, RMSprop, Adadelta, Adamax)}


def make_optimizer(kind: str, learning_rate: float) -> Optimizer:
    try:
        cls = _CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown optimizer {kind!r}; choose from {OPTIMIZERS}") from None
    return cls(learning_rate)


def optimizer_step(state: Optimizer, params, grads) -> Optimizer:
    state.step(params, grads)
    return state
