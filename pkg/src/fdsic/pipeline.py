"""
Two-stage canceller: least-squares linear stage, then a non-linear model of
the residual it leaves.

The non-linear stage is a polynomial (PH basis) fit or one of the executable
networks. Network inputs are the sliding ``M x 2`` graphs of the transmitted
signal and targets are the I/Q of the linear residual, each divided by its
max-abs value on the training split.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .architectures import ArchitectureConfig, build_network, input_graphs, iq_pairs, preset
from .linear import LinearTaps, fit_linear, predict_linear
from .nn import Sequential, TrainHistory, train
from .nn.network import network_from_dict, network_to_dict
from .poly import PolyBasisSpec, fit_poly, predict_poly, split_linear
from .signals import _unwrap

CHECKPOINT_FORMAT = "fdsic-canceller"


@dataclass(frozen=True)
class CancellationStages:
    linear_estimate: np.ndarray
    linear_residual: np.ndarray
    nonlinear_estimate: np.ndarray
    total_residual: np.ndarray


@dataclass
class TwoStageCanceler:
    """A fitted canceller. Build one with :func:`fit_canceler` or :func:`load_canceler`.

    Attributes
    ----------
    config : ArchitectureConfig
    linear_taps : LinearTaps
    poly_coeffs : ndarray or None
        Non-linear PH coefficients (``polynomial`` kind only).
    network : Sequential or None
        Residual network (NN kinds only).
    input_scale, target_scale : float
        Max-abs normalisers of the network input and target.
    history : TrainHistory or None
    """

    config: ArchitectureConfig
    linear_taps: LinearTaps
    poly_coeffs: np.ndarray | None = None
    network: Sequential | None = None
    input_scale: float = 1.0
    target_scale: float = 1.0
    history: TrainHistory | None = None
    seed: int | None = None
    fitted: bool = field(default=True, repr=False)

    @property
    def M(self) -> int:
        return self.config.M

    def predict_nonlinear(self, tx) -> np.ndarray:
        arr, _ = _unwrap(tx)
        if self.config.kind == "linear":
            return np.zeros_like(arr)
        if self.config.kind == "polynomial":
            return predict_poly(arr, self.poly_coeffs, PolyBasisSpec(self.config.P, self.M))
        out = self.network.predict(input_graphs(arr, self.M) / self.input_scale)
        return (out[:, 0] + 1j * out[:, 1]) * self.target_scale

    def predict(self, tx) -> np.ndarray:
        arr, _ = _unwrap(tx)
        return predict_linear(arr, self.linear_taps) + self.predict_nonlinear(arr)

    @property
    def warmup(self) -> int:
        """Leading samples whose transmit history lies before the segment."""
        return self.M - 1

    def cancel(self, tx, rx, warmup: int | None = None) -> CancellationStages:
        """Estimates and residuals with the first ``warmup`` samples dropped.

        ``warmup`` defaults to ``M - 1``: those outputs depend on transmit
        samples outside the given segment.
        """
        tx_arr, _ = _unwrap(tx)
        rx_arr, _ = _unwrap(rx)
        if tx_arr.size != rx_arr.size:
            raise ValueError(f"length mismatch: tx has {tx_arr.size} samples, rx has {rx_arr.size}")
        k = self.warmup if warmup is None else int(warmup)
        if not 0 <= k < tx_arr.size:
            raise ValueError(f"segment of {tx_arr.size} samples is shorter than the warm-up {k}")
        lin = predict_linear(tx_arr, self.linear_taps)[k:]
        resid = rx_arr[k:] - lin
        nl = self.predict_nonlinear(tx_arr)[k:]
        return CancellationStages(lin, resid, nl, resid - nl)

    # checkpoint ---------------------------------------------------------

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        return {
            "format": CHECKPOINT_FORMAT,
            "version": 1,
            "config": cfg,
            "seed": self.seed,
            "linear_taps": _complex_record(self.linear_taps.h),
            "poly_coeffs": None if self.poly_coeffs is None else _complex_record(self.poly_coeffs),
            "network": None if self.network is None else network_to_dict(self.network),
            "input_scale": self.input_scale,
            "target_scale": self.target_scale,
            "history": None if self.history is None else asdict(self.history),
        }

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=1) + "\n")
        return path


def _complex_record(z) -> dict:
    z = np.asarray(z, dtype=np.complex128).reshape(-1)
    return {"re": [float(v) for v in z.real], "im": [float(v) for v in z.imag]}


def _complex_from_record(rec) -> np.ndarray:
    return np.array(rec["re"], dtype=float) + 1j * np.array(rec["im"], dtype=float)


def canceler_from_dict(d: dict) -> TwoStageCanceler:
    if d.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a canceller checkpoint")
    cfg = ArchitectureConfig(**d["config"])
    hist = None
    if d.get("history") is not None:
        hist = TrainHistory(**d["history"])
    return TwoStageCanceler(
        config=cfg,
        linear_taps=LinearTaps(_complex_from_record(d["linear_taps"])),
        poly_coeffs=None if d["poly_coeffs"] is None else _complex_from_record(d["poly_coeffs"]),
        network=None if d["network"] is None else network_from_dict(d["network"]),
        input_scale=float(d["input_scale"]),
        target_scale=float(d["target_scale"]),
        history=hist,
        seed=d.get("seed"),
    )


def load_canceler(path) -> TwoStageCanceler:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing checkpoint {path}")
    return canceler_from_dict(json.loads(path.read_text()))


def _max_abs(a) -> float:
    s = float(np.max(np.abs(a))) if a.size else 0.0
    return s if s > 0 else 1.0


def fit_canceler(config: ArchitectureConfig | str, train_tx, train_rx, *, seed: int = 0,
                 validation=None, epochs: int | None = None, batch_size: int | None = None,
                 learning_rate: float | None = None, optimizer: str | None = None,
                 normalize: bool = True, joint_linear: bool = True) -> TwoStageCanceler:
    """Fit the linear stage, then the configured non-linear stage on its residual.

    Parameters
    ----------
    config : ArchitectureConfig or preset name
    validation : tuple, optional
        ``(test_tx, test_rx)`` used for best-epoch retention of networks.
    epochs, batch_size, learning_rate, optimizer
        Override the config's training settings.
    normalize : bool
        Max-abs normalise network inputs and targets.
    joint_linear : bool
        For the polynomial kind, refit the linear taps together with the
        non-linear basis on the residual and fold the correction back into
        the linear stage. The parameter count is unchanged. With ``False``
        the non-linear basis alone is fitted to the frozen linear residual.
    """
    cfg = preset(config) if isinstance(config, str) else config
    if cfg.kind in ("cv_tdnn", "lwgs", "mwgs"):
        raise ValueError(f"{cfg.kind} is a complexity-only architecture and cannot be trained")
    tx, _ = _unwrap(train_tx)
    rx, _ = _unwrap(train_rx)
    if tx.size != rx.size:
        raise ValueError(f"length mismatch: tx has {tx.size} samples, rx has {rx.size}")
    k = cfg.M - 1
    if tx.size <= k + 2 * cfg.M:
        raise ValueError(f"training segment of {tx.size} samples is too short for M={cfg.M}")
    taps = fit_linear(tx, rx, cfg.M, drop_transient=True)
    resid = rx - predict_linear(tx, taps)
    target_scale = _max_abs(iq_pairs(resid[k:])) if normalize else 1.0

    if cfg.kind == "linear":
        return TwoStageCanceler(cfg, taps, target_scale=target_scale, seed=seed)

    if cfg.kind == "polynomial":
        if joint_linear:
            spec = PolyBasisSpec(cfg.P, cfg.M, include_linear=True)
            lin, coeffs, _ = split_linear(fit_poly(tx, resid, spec, normalize=True,
                                                      drop_transient=k), spec)
            taps = LinearTaps(taps.h + lin)
        else:
            coeffs = fit_poly(tx, resid, PolyBasisSpec(cfg.P, cfg.M), normalize=True,
                              drop_transient=k)
        return TwoStageCanceler(cfg, taps, poly_coeffs=coeffs, target_scale=target_scale,
                                seed=seed)

    x = input_graphs(tx, cfg.M)[k:]
    input_scale = _max_abs(x) if normalize else 1.0
    y = iq_pairs(resid[k:]) / target_scale
    val = None
    if validation is not None:
        vtx, _ = _unwrap(validation[0])
        vrx, _ = _unwrap(validation[1])
        vres = vrx - predict_linear(vtx, taps)
        val = (input_graphs(vtx, cfg.M)[k:] / input_scale, iq_pairs(vres[k:]) / target_scale)
    rng = np.random.default_rng(seed)
    net = build_network(cfg, rng)
    net, hist = train(net, x / input_scale, y,
                      epochs=epochs or cfg.epochs,
                      batch_size=batch_size or cfg.batch_size,
                      optimizer=optimizer or cfg.optimizer,
                      learning_rate=learning_rate or cfg.learning_rate,
                      seed=int(rng.integers(2**63)), validation=val)
    return TwoStageCanceler(cfg, taps, network=net, input_scale=input_scale,
                            target_scale=target_scale, history=hist, seed=seed)
