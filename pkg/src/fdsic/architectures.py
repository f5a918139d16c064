"""
Canceller architectures: input graphs, network assembly and named presets.

Every executable network reads an ``M x 2`` input graph whose row ``m`` is
``(Re x[n-m], Im x[n-m])`` and predicts the residual's ``(I, Q)`` at ``n``.

- ``hcrnn``: conv2d -> reshape -> simple recurrent -> linear dense(2)
- ``hcrdnn``: as ``hcrnn`` with a dense hidden layer before the output
- ``rv_tdnn``: flattened graph through a dense stack
- ``rnn``: recurrent stack over the ``M`` samples (oldest first, 2 reals per step)

``cv_tdnn``, ``lwgs`` and ``mwgs`` are complex-valued networks that exist only
for complexity accounting; ``polynomial`` and ``linear`` describe the
non-NN cancellers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .nn import (Conv2d, Dense, FeatureMapReshape, Flatten, Recurrent, Sequential, TimeReverse,
                 initialize)
from .signals import _unwrap

KINDS = ("hcrnn", "hcrdnn", "rv_tdnn", "rnn", "cv_tdnn", "lwgs", "mwgs", "polynomial", "linear")
EXECUTABLE_NN = ("hcrnn", "hcrdnn", "rv_tdnn", "rnn")
COMPLEXITY_ONLY = ("cv_tdnn", "lwgs", "mwgs")

# fields each kind needs; anything else must stay None
_REQUIRED = {
    "hcrnn": ("L", "R", "S", "n_hr"),
    "hcrdnn": ("L", "R", "S", "n_hr", "n_hd"),
    "rv_tdnn": ("hidden_layer_sizes",),
    "rnn": ("hidden_layer_sizes",),
    "cv_tdnn": ("hidden_layer_sizes",),
    "lwgs": ("hidden_layer_sizes",),
    "mwgs": ("hidden_layer_sizes", "W"),
    "polynomial": ("P",),
    "linear": (),
}
_OPTIONAL = ("L", "R", "S", "n_hr", "n_hd", "hidden_layer_sizes", "W", "P")


@dataclass(frozen=True)
class ArchitectureConfig:
    """Hyper-parameters of one canceller plus its training settings.

    ``activation`` applies to every hidden layer unless one of the per-layer
    overrides (``conv_activation``, ``recurrent_activation``,
    ``dense_activation``) is given. ``published_*`` fields carry reference
    figures for reporting and are never used in computation.
    """

    kind: str
    name: str = ""
    M: int = 13
    L: int | None = None
    R: int | None = None
    S: int | None = None
    Z: int = 1
    n_hr: int | None = None
    n_hd: int | None = None
    hidden_layer_sizes: tuple | None = None
    W: int | None = None
    P: int | None = None
    activation: str = "relu"
    conv_activation: str | None = None
    recurrent_activation: str | None = None
    dense_activation: str | None = None
    learning_rate: float = 5e-3
    batch_size: int = 62
    optimizer: str = "adam"
    epochs: int = 50
    published_si_canc_db: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown architecture kind {self.kind!r}; choose from {KINDS}")
        if self.hidden_layer_sizes is not None:
            object.__setattr__(self, "hidden_layer_sizes",
                               tuple(int(n) for n in self.hidden_layer_sizes))
        need = _REQUIRED[self.kind]
        for f in need:
            if getattr(self, f) is None:
                raise ValueError(f"{self.kind} config requires {f}")
        for f in _OPTIONAL:
            if f not in need and getattr(self, f) is not None:
                raise ValueError(f"{self.kind} config does not take {f}")
        if self.M < 1:
            raise ValueError("memory M must be positive")
        if self.Z != 1:
            raise ValueError("only single-channel filters (Z=1) are supported")
        if self.kind in ("hcrnn", "hcrdnn"):
            if not (1 <= self.R <= self.M and 1 <= self.S <= 2):
                raise ValueError(f"filter {self.R}x{self.S} does not fit a {self.M}x2 input graph")
            for f in ("L", "n_hr") + (("n_hd",) if self.kind == "hcrdnn" else ()):
                if getattr(self, f) < 1:
                    raise ValueError(f"{f} must be positive")
        if self.hidden_layer_sizes is not None:
            if not self.hidden_layer_sizes or min(self.hidden_layer_sizes) < 1:
                raise ValueError("hidden_layer_sizes must be non-empty positive integers")
            if self.kind in ("lwgs", "mwgs") and len(self.hidden_layer_sizes) != 1:
                raise ValueError(f"{self.kind} takes a single hidden size")
        if self.kind == "mwgs" and not 1 <= self.W:
            raise ValueError("window W must be positive")
        if self.kind == "polynomial" and (self.P < 1 or self.P % 2 == 0):
            raise ValueError("P must be odd and positive")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning_rate, batch_size and epochs must be positive")

    @property
    def label(self) -> str:
        return self.name or self.kind

    @property
    def executable(self) -> bool:
        return self.kind in EXECUTABLE_NN

    @property
    def conv_act(self) -> str:
        return self.conv_activation or self.activation

    @property
    def rec_act(self) -> str:
        return self.recurrent_activation or self.activation

    @property
    def dense_act(self) -> str:
        return self.dense_activation or self.activation

    @property
    def conv_output(self) -> tuple[int, int]:
        """``(B, C) = (M - R + 1, 2 - S + 1)``."""
        return self.M - self.R + 1, 2 - self.S + 1

    def with_(self, **changes) -> "ArchitectureConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# presets

_PRESETS = {
    "hcrnn_opt": dict(kind="hcrnn", L=3, R=12, S=1, n_hr=9, batch_size=62,
                      published_si_canc_db=44.50),
    "hcrdnn1": dict(kind="hcrdnn", L=2, R=12, S=1, n_hr=7, n_hd=11, batch_size=158,
                    published_si_canc_db=44.44),
    "hcrdnn2": dict(kind="hcrdnn", L=3, R=12, S=1, n_hr=5, n_hd=12, batch_size=158,
                    published_si_canc_db=44.41),
    "rv_tdnn": dict(kind="rv_tdnn", hidden_layer_sizes=(18,), batch_size=22,
                    published_si_canc_db=44.76),
    "rnn": dict(kind="rnn", hidden_layer_sizes=(20,), activation="tanh", learning_rate=2.5e-3,
                batch_size=158, published_si_canc_db=44.94),
    "cv_tdnn": dict(kind="cv_tdnn", hidden_layer_sizes=(7,), activation="crelu",
                    learning_rate=4.5e-3, published_si_canc_db=44.50),
    "lwgs": dict(kind="lwgs", hidden_layer_sizes=(9,), activation="crelu", learning_rate=4.5e-3,
                 published_si_canc_db=44.48),
    "mwgs": dict(kind="mwgs", hidden_layer_sizes=(12,), W=5, activation="crelu",
                 learning_rate=4.5e-3, published_si_canc_db=44.40),
    "deep_rv_tdnn": dict(kind="rv_tdnn", hidden_layer_sizes=(10, 10, 10), batch_size=22,
                         published_si_canc_db=44.73),
    "deep_rnn": dict(kind="rnn", hidden_layer_sizes=(16, 16, 16), activation="tanh",
                     learning_rate=2.5e-3, batch_size=158, published_si_canc_db=45.27),
    "deep_cv_tdnn": dict(kind="cv_tdnn", hidden_layer_sizes=(4, 4, 4), activation="crelu",
                         learning_rate=4.5e-3, published_si_canc_db=44.63),
    "poly_p5": dict(kind="polynomial", P=5, published_si_canc_db=44.45),
    "linear": dict(kind="linear"),
}

PRESET_NAMES = tuple(_PRESETS)

#: rows of the published complexity-reduction comparison, in order
TABLE_PRESETS = ("poly_p5", "rv_tdnn", "rnn", "cv_tdnn", "lwgs", "mwgs", "deep_rv_tdnn",
                 "deep_rnn", "deep_cv_tdnn", "hcrnn_opt", "hcrdnn1", "hcrdnn2")


def preset(name: str) -> ArchitectureConfig:
    try:
        kw = _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    return ArchitectureConfig(name=name, **kw)


# ---------------------------------------------------------------------------
# input graphs


@dataclass(frozen=True)
class InputGraph:
    """``M x 2`` real matrix; row ``m`` holds the I/Q of the sample ``m`` steps back."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 1:
            raise ValueError(f"input graph must be M x 2 with M >= 1, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]


def build_input_graph(x, n: int, M: int) -> InputGraph:
    arr, _ = _unwrap(x)
    if not 0 <= n < arr.size:
        raise IndexError(f"sample index {n} outside signal of length {arr.size}")
    if M < 1:
        raise ValueError("memory M must be positive")
    out = np.zeros((M, 2))
    k = min(M, n + 1)
    seg = arr[n - k + 1 : n + 1][::-1]
    out[:k, 0], out[:k, 1] = seg.real, seg.imag
    return InputGraph(out)


def input_graphs(x, M: int) -> np.ndarray:
    """Stack of every sliding input graph, shape ``(N, M, 2)``."""
    arr, _ = _unwrap(x)
    if M < 1:
        raise ValueError("memory M must be positive")
    padded = np.concatenate([np.zeros(M - 1, dtype=complex), arr])
    win = sliding_window_view(padded, M)[:, ::-1]  # (N, M), column m = x[n-m]
    return np.stack([win.real, win.imag], axis=-1)


def iq_pairs(y) -> np.ndarray:
    arr, _ = _unwrap(y, allow_empty=True)
    return np.column_stack([arr.real, arr.imag])


# ---------------------------------------------------------------------------
# networks


def _zeros_dense(n_in, n_out, act):
    return Dense(np.zeros((n_in, n_out)), np.zeros(n_out), act)


def _zeros_recurrent(n_in, n_hr, act, seq=False):
    return Recurrent(np.zeros((n_in, n_hr)), np.zeros((n_hr, n_hr)), np.zeros(n_hr), act, seq)


def build_network(config: ArchitectureConfig, rng: np.random.Generator | int | None = None
                  ) -> Sequential:
    """Assemble the network for an executable config.

    With ``rng`` (a Generator or seed) weights are Glorot-initialised,
    otherwise every parameter is zero.
    """
    c = config
    if not c.executable:
        raise ValueError(f"{c.kind} has no executable network")
    if c.kind in ("hcrnn", "hcrdnn"):
        B, C = c.conv_output
        layers = [Conv2d(np.zeros((c.L, c.R, c.S)), np.zeros(c.L), c.conv_act),
                  FeatureMapReshape(),
                  _zeros_recurrent(C * c.L, c.n_hr, c.rec_act)]
        last = c.n_hr
        if c.kind == "hcrdnn":
            layers.append(_zeros_dense(c.n_hr, c.n_hd, c.dense_act))
            last = c.n_hd
    elif c.kind == "rv_tdnn":
        layers, last = [Flatten()], 2 * c.M
        for n in c.hidden_layer_sizes:
            layers.append(_zeros_dense(last, n, c.activation))
            last = n
    else:  # rnn
        layers, last = [TimeReverse()], 2
        sizes = c.hidden_layer_sizes
        for j, n in enumerate(sizes):
            layers.append(_zeros_recurrent(last, n, c.activation, seq=j < len(sizes) - 1))
            last = n
    layers.append(_zeros_dense(last, 2, "linear"))
    net = Sequential(layers, (c.M, 2))
    if rng is not None:
        initialize(net, np.random.default_rng(rng))
    return net


_PATTERNS = {
    "hcrnn": ("conv2d", "reshape", "recurrent", "dense"),
    "hcrdnn": ("conv2d", "reshape", "recurrent", "dense", "dense"),
}


def _forward(net: Sequential, graph, check):
    if not check(tuple(layer.kind for layer in net.layers)):
        raise ValueError(f"network {net!r} does not have the expected layer structure")
    v = graph.values if isinstance(graph, InputGraph) else np.asarray(graph, dtype=float)
    single = v.ndim == 2
    out = net.forward(v[None] if single else v)
    return (out[0, 0], out[0, 1]) if single else (out[:, 0], out[:, 1])


def forward_hcrnn(graph, net: Sequential):
    """``(I', Q')`` for one graph (scalars) or a stack of graphs (arrays)."""
    return _forward(net, graph, lambda k: k == _PATTERNS["hcrnn"])


def forward_hcrdnn(graph, net: Sequential):
    return _forward(net, graph, lambda k: k == _PATTERNS["hcrdnn"])


def forward_rv_tdnn(graph, net: Sequential):
    return _forward(net, graph, lambda k: k[0] == "flatten" and set(k[1:]) == {"dense"})


def forward_rnn_baseline(graph, net: Sequential):
    return _forward(net, graph, lambda k: k[0] == "time_reverse" and k[-1] == "dense"
                    and set(k[1:-1]) == {"recurrent"})
