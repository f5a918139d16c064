"""
Real-valued layers with hand-written reverse-mode gradients.

Every layer works on a leading batch axis, caches what it needs during
``forward`` and accumulates parameter gradients into ``grads`` (same order
as ``params``) during ``backward``. Weight matrices multiply row vectors from
the right (``x @ W``), so a dense layer's ``W`` has shape ``(in, out)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


def activation_eval(kind: str, z):
    """ReLU ``max(0, z)``, sigmoid ``1/(exp(-z)+1)``, tanh, or identity."""
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        # split by sign so exp never overflows
        z = np.asarray(z, dtype=float)
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (np.exp(-z[pos]) + 1.0)
        ez = np.exp(z[~pos])
        out[~pos] = ez / (ez + 1.0)
        return out if out.ndim else float(out)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "linear":
        return z
    raise ValueError(f"unknown activation {kind!r}; choose from {ACTIVATIONS}")


def activation_derivative(kind: str, z, a):
    """Derivative at pre-activation ``z`` given the output ``a``. ReLU'(0) is 0."""
    if kind == "relu":
        return (z > 0).astype(float)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "linear":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {kind!r}")


def _check_activation(kind):
    if kind not in ACTIVATIONS:
        raise ValueError(f"unknown activation {kind!r}; choose from {ACTIVATIONS}")
    return kind


class Layer:
    kind = "layer"
    params: list
    grads: list

    def __init__(self):
        self.params = []
        self.grads = []

    def forward(self, x):
        raise NotImplementedError

    def backward(self, g):
        raise NotImplementedError

    def config(self) -> dict:
        return {}

    def output_shape(self, input_shape: tuple) -> tuple:
        raise NotImplementedError

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def zero_grad(self):
        for g in self.grads:
            g.fill(0.0)


class Dense(Layer):
    kind = "dense"

    def __init__(self, W, b, activation="linear"):
        super().__init__()
        W = np.array(W, dtype=float)
        b = np.array(b, dtype=float).reshape(-1)
        if W.ndim != 2 or W.shape[1] != b.size:
            raise ValueError(f"dense weight {W.shape} and bias {b.shape} disagree")
        self.W, self.b = W, b
        self.activation = _check_activation(activation)
        self.params = [self.W, self.b]
        self.grads = [np.zeros_like(self.W), np.zeros_like(self.b)]

    def config(self):
        return {"activation": self.activation}

    def output_shape(self, input_shape):
        if input_shape != (self.W.shape[0],):
            raise ValueError(f"dense layer expects ({self.W.shape[0]},) input, got {input_shape}")
        return (self.W.shape[1],)

    def forward(self, x):
        if x.shape[-1] != self.W.shape[0]:
            raise ValueError(f"dense layer expects {self.W.shape[0]} inputs, got {x.shape[-1]}")
        self._x = x
        self._z = x @ self.W + self.b
        self._a = activation_eval(self.activation, self._z)
        return self._a

    def backward(self, g):
        dz = g * activation_derivative(self.activation, self._z, self._a)
        self.grads[0] += self._x.T @ dz
        self.grads[1] += dz.sum(axis=0)
        return dz @ self.W.T


class Conv2d(Layer):
    """``L`` filters of size ``R x S`` (depth 1), unit stride, no padding.

    Input ``(N, M, 2)``, output ``(N, B, C, L)`` with ``B = M-R+1`` and
    ``C = 2-S+1``; element ``(i, j, l)`` is
    ``f(sum_{r,s} X[i+r, j+s] K_l[r, s] + b_l)``.
    """

    kind = "conv2d"

    def __init__(self, kernels, biases, activation="relu"):
        super().__init__()
        K = np.array(kernels, dtype=float)
        b = np.array(biases, dtype=float).reshape(-1)
        if K.ndim != 3 or K.shape[0] != b.size:
            raise ValueError(f"kernels must be (L, R, S) with L biases, got {K.shape} and {b.shape}")
        self.K, self.b = K, b
        self.activation = _check_activation(activation)
        self.params = [self.K, self.b]
        self.grads = [np.zeros_like(self.K), np.zeros_like(self.b)]

    @property
    def geometry(self):
        return self.K.shape

    def config(self):
        return {"activation": self.activation}

    def output_shape(self, input_shape):
        rows, cols = input_shape
        L, R, S = self.K.shape
        if R > rows or S > cols:
            raise ValueError(f"filter {R}x{S} larger than input {rows}x{cols}")
        return (rows - R + 1, cols - S + 1, L)

    def forward(self, x):
        L, R, S = self.K.shape
        if x.ndim != 3:
            raise ValueError(f"conv2d expects (N, rows, cols) input, got shape {x.shape}")
        B, C, _ = self.output_shape(x.shape[1:])
        win = sliding_window_view(x, (R, S), axis=(1, 2))  # (N, B, C, R, S)
        self._in_shape = x.shape
        self._patches = win.reshape(-1, R * S)
        z = self._patches @ self.K.reshape(L, R * S).T + self.b
        self._z = z.reshape(x.shape[0], B, C, L)
        self._a = activation_eval(self.activation, self._z)
        return self._a

    def backward(self, g):
        L, R, S = self.K.shape
        dz = g * activation_derivative(self.activation, self._z, self._a)
        N, B, C, _ = dz.shape
        flat = dz.reshape(-1, L)
        self.grads[0] += (flat.T @ self._patches).reshape(L, R, S)
        self.grads[1] += flat.sum(axis=0)
        dx = np.zeros(self._in_shape)
        for r in range(R):
            for s in range(S):
                dx[:, r : r + B, s : s + C] += dz @ self.K[:, r, s]
        return dx


class FeatureMapReshape(Layer):
    """``(N, B, C, L) -> (N, B, C*L)``: row ``t`` is ``[F^1[t] F^2[t] ... F^L[t]]``."""

    kind = "reshape"

    def output_shape(self, input_shape):
        B, C, L = input_shape
        return (B, C * L)

    def forward(self, x):
        self._in_shape = x.shape
        N, B, C, L = x.shape
        return x.transpose(0, 1, 3, 2).reshape(N, B, L * C)

    def backward(self, g):
        N, B, C, L = self._in_shape
        return g.reshape(N, B, L, C).transpose(0, 1, 3, 2)


def unreshape_feature_maps(x, C: int):
    """Inverse of :class:`FeatureMapReshape` for ``C`` columns per map."""
    N, B, CL = x.shape
    return x.reshape(N, B, CL // C, C).transpose(0, 1, 3, 2)


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, g):
        return g.reshape(self._in_shape)


class TimeReverse(Layer):
    """Flip the time axis, turning newest-first rows into chronological order."""

    kind = "time_reverse"

    def output_shape(self, input_shape):
        return input_shape

    def forward(self, x):
        return x[:, ::-1]

    def backward(self, g):
        return g[:, ::-1]


class Recurrent(Layer):
    """Simple recurrent layer ``y(t) = f(x(t) Wx + y(t-1) Wy + b)`` from ``y(0) = 0``.

    Returns the final state ``(N, n_hr)`` or, with ``return_sequences``, every
    state ``(N, T, n_hr)``.
    """

    kind = "recurrent"

    def __init__(self, Wx, Wy, b, activation="relu", return_sequences=False):
        super().__init__()
        Wx = np.array(Wx, dtype=float)
        Wy = np.array(Wy, dtype=float)
        b = np.array(b, dtype=float).reshape(-1)
        n_hr = b.size
        if Wx.ndim != 2 or Wx.shape[1] != n_hr or Wy.shape != (n_hr, n_hr):
            raise ValueError(f"recurrent shapes disagree: Wx {Wx.shape}, Wy {Wy.shape}, b {b.shape}")
        self.Wx, self.Wy, self.b = Wx, Wy, b
        self.activation = _check_activation(activation)
        self.return_sequences = bool(return_sequences)
        self.params = [self.Wx, self.Wy, self.b]
        self.grads = [np.zeros_like(p) for p in self.params]

    def config(self):
        return {"activation": self.activation, "return_sequences": self.return_sequences}

    def output_shape(self, input_shape):
        T, n_i = input_shape
        if n_i != self.Wx.shape[0]:
            raise ValueError(f"recurrent layer expects {self.Wx.shape[0]} features, got {n_i}")
        return (T, self.b.size) if self.return_sequences else (self.b.size,)

    def forward(self, x):
        if x.ndim != 3 or x.shape[2] != self.Wx.shape[0]:
            raise ValueError(f"recurrent layer expects (N, T, {self.Wx.shape[0]}) input, got {x.shape}")
        N, T, _ = x.shape
        h = np.zeros((N, self.b.size))
        self._x = x
        self._h = [h]
        self._z = []
        xw = x @ self.Wx  # (N, T, n_hr)
        for t in range(T):
            z = xw[:, t] + h @ self.Wy + self.b
            h = activation_eval(self.activation, z)
            self._z.append(z)
            self._h.append(h)
        if self.return_sequences:
            return np.stack(self._h[1:], axis=1)
        return h

    def backward(self, g):
        x = self._x
        N, T, _ = x.shape
        dx = np.empty_like(x)
        dz_all = np.empty((N, T, self.b.size))
        dh = np.zeros((N, self.b.size))
        for t in range(T - 1, -1, -1):
            if self.return_sequences:
                dh = dh + g[:, t]
            elif t == T - 1:
                dh = dh + g
            dz = dh * activation_derivative(self.activation, self._z[t], self._h[t + 1])
            dz_all[:, t] = dz
            self.grads[1] += self._h[t].T @ dz
            dh = dz @ self.Wy.T
        self.grads[0] += np.tensordot(x, dz_all, axes=([0, 1], [0, 1]))
        self.grads[2] += dz_all.sum(axis=(0, 1))
        dx[:] = dz_all @ self.Wx.T
        return dx


LAYER_TYPES = {cls.kind: cls for cls in (Dense, Conv2d, FeatureMapReshape, Flatten, TimeReverse, Recurrent)}
