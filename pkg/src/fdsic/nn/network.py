"""Sequential network container and its plain-text checkpoint format."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .layers import LAYER_TYPES, Layer

CHECKPOINT_VERSION = 1


class Sequential:
    """Layers applied in order; the last layer's output is the prediction."""

    def __init__(self, layers, input_shape):
        self.layers = list(layers)
        self.input_shape = tuple(int(d) for d in input_shape)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
        self.output_shape = shape

    def __repr__(self):
        kinds = " -> ".join(layer.kind for layer in self.layers)
        return f"Sequential({kinds}; {self.n_params} params)"

    @property
    def params(self) -> list:
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self) -> list:
        return [g for layer in self.layers for g in layer.grads]

    @property
    def n_params(self) -> int:
        return sum(layer.n_params for layer in self.layers)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[1:] != self.input_shape:
            raise ValueError(f"network expects inputs of shape (N, {self.input_shape}), got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, g):
        """Accumulate parameter gradients for upstream gradient ``g``; returns d/dinput."""
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def predict(self, x, batch_size: int = 4096):
        x = np.asarray(x, dtype=float)
        if x.shape[0] == 0:
            return np.zeros((0,) + self.output_shape)
        return np.concatenate([self.forward(x[i : i + batch_size])
                               for i in range(0, x.shape[0], batch_size)])

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params]) if self.params else np.zeros(0)

    def set_flat(self, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} values, got {flat.size}")
        i = 0
        for p in self.params:
            p[...] = flat[i : i + p.size].reshape(p.shape)
            i += p.size

    def copy(self) -> "Sequential":
        return network_from_dict(network_to_dict(self))

    # checkpoint ---------------------------------------------------------

    def to_dict(self) -> dict:
        return network_to_dict(self)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "Sequential":
        return network_from_dict(json.loads(Path(path).read_text()))


def _array_record(a: np.ndarray) -> dict:
    # json writes floats with repr(), which round-trips float64 exactly
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _array_from_record(rec) -> np.ndarray:
    shape = tuple(int(d) for d in rec["shape"])
    data = np.array(rec["data"], dtype=float)
    if data.size != int(np.prod(shape)):
        raise ValueError(f"checkpoint array of shape {shape} has {data.size} values")
    if not np.all(np.isfinite(data)):
        raise ValueError("checkpoint contains non-finite parameters")
    return data.reshape(shape)


def network_to_dict(net: Sequential) -> dict:
    return {
        "format": "fdsic-network",
        "version": CHECKPOINT_VERSION,
        "input_shape": list(net.input_shape),
        "layers": [{"type": layer.kind, "config": layer.config(),
                    "params": [_array_record(p) for p in layer.params]}
                   for layer in net.layers],
    }


def network_from_dict(d: dict) -> Sequential:
    if d.get("format") != "fdsic-network":
        raise ValueError("not a network checkpoint")
    if d.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')}")
    layers: list[Layer] = []
    for rec in d["layers"]:
        cls = LAYER_TYPES.get(rec["type"])
        if cls is None:
            raise ValueError(f"unknown layer type {rec['type']!r} in checkpoint")
        arrays = [_array_from_record(r) for r in rec["params"]]
        layers.append(cls(*arrays, **rec.get("config", {})))
    return Sequential(layers, d["input_shape"])
