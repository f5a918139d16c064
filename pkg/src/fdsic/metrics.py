"""Cancellation in dB, Welch PSD estimates and their CSV forms."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .signals import _unwrap

#: default dBm reference annotated on PSD plots; never used in cancellation math
DEFAULT_REFERENCE_DBM = -42.74


def cancellation_db(y_si, y_resid) -> float:
    """``10 log10(sum |y_si|^2 / sum |y_resid|^2)``.

    Returns ``inf`` (with a warning) when the residual is exactly zero.

    Raises
    ------
    ValueError
        On length mismatch or zero SI power.
    """
    a, _ = _unwrap(y_si)
    b, _ = _unwrap(y_resid)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} SI samples vs {b.size} residual samples")
    num = float(np.sum(a.real ** 2 + a.imag ** 2))
    den = float(np.sum(b.real ** 2 + b.imag ** 2))
    if num == 0.0:
        raise ValueError("zero SI power")
    if den == 0.0:
        warnings.warn("residual is exactly zero; cancellation is infinite", RuntimeWarning,
                      stacklevel=2)
        return float("inf")
    return float(10.0 * np.log10(num / den))


@dataclass(frozen=True)
class PsdEstimate:
    """Two-sided PSD on an ascending frequency grid.

    ``psd`` is power per Hz; ``power_dbm_per_bin`` is ``10 log10(psd * df)``
    taking unit signal power as 1 mW. ``reference_dbm`` is only a plot
    annotation.
    """

    freqs_hz: np.ndarray
    psd: np.ndarray
    segment_length: int
    overlap: int
    window_kind: str
    sample_rate_hz: float
    reference_dbm: float = DEFAULT_REFERENCE_DBM

    @property
    def bin_width_hz(self) -> float:
        return self.sample_rate_hz / self.segment_length

    @property
    def power_dbm_per_bin(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.psd * self.bin_width_hz)

    @property
    def total_power(self) -> float:
        return float(np.sum(self.psd) * self.bin_width_hz)

    def band_power_db(self, half_width_hz: float | None = None) -> float:
        """Mean per-bin power (dB) over ``|f| <= half_width_hz``, default ``fs/8``."""
        hw = self.sample_rate_hz / 8 if half_width_hz is None else half_width_hz
        sel = np.abs(self.freqs_hz) <= hw
        if not np.any(sel):
            raise ValueError("band contains no frequency bins")
        with np.errstate(divide="ignore"):
            return float(10.0 * np.log10(np.mean(self.psd[sel]) * self.bin_width_hz))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["freq_hz", "psd_per_hz", "power_dbm_per_bin"])
        for f, p, d in zip(self.freqs_hz, self.psd, self.power_dbm_per_bin):
            w.writerow([repr(float(f)), repr(float(p)), repr(float(d))])
        return buf.getvalue()


def psd_welch(x, segment_length: int = 1024, overlap: int | None = None, window: str = "hann",
              sample_rate_hz: float | None = None,
              reference_dbm: float = DEFAULT_REFERENCE_DBM) -> PsdEstimate:
    """Welch estimate of a complex baseband signal.

    Parameters
    ----------
    segment_length : int
        Samples per periodogram, at most the signal length.
    overlap : int, optional
        Samples shared by consecutive segments; default half a segment.
    window : str
        Any window name understood by :func:`scipy.signal.get_window`
        (``"boxcar"`` for rectangular).
    sample_rate_hz : float, optional
        Taken from a ``ComplexSignal`` when not given, else 1.0.
    """
    arr, rate = _unwrap(x)
    fs = float(sample_rate_hz or rate or 1.0)
    if overlap is None:
        overlap = segment_length // 2
    if not 1 <= segment_length <= arr.size:
        raise ValueError(f"segment length {segment_length} must lie in [1, {arr.size}]")
    if not 0 <= overlap < segment_length:
        raise ValueError(f"overlap {overlap} must lie in [0, segment_length)")
    f, p = sps.welch(arr, fs=fs, window=window, nperseg=segment_length, noverlap=overlap,
                     return_onesided=False, detrend=False, scaling="density")
    f, p = np.fft.fftshift(f), np.fft.fftshift(p)
    return PsdEstimate(f, p, segment_length, overlap, window, fs, reference_dbm)


@dataclass(frozen=True)
class CancellationReport:
    """Summary of one evaluation.

    ``mse`` is measured on the normalised I/Q residual the non-linear stage
    models, the same scale used in training histories.
    """

    name: str
    linear_db: float
    total_db: float
    mse: float
    flops: int
    params: int
    n_samples: int

    @property
    def nonlinear_gain_db(self) -> float:
        return self.total_db - self.linear_db

    def as_row(self) -> dict:
        return {"name": self.name, "linear_db": self.linear_db, "total_db": self.total_db,
                "mse": self.mse, "flops": self.flops, "params": self.params,
                "n_samples": self.n_samples}


def evaluate_canceler(canceler, test_tx, test_rx) -> CancellationReport:
    """Cancellation of a fitted two-stage canceller on held-out data.

    The canceller's warm-up samples at the start of the segment are excluded.
    """
    from .complexity import complexity_of
    from .nn import mse_loss

    if canceler is None or not getattr(canceler, "fitted", False):
        raise ValueError("canceller is not fitted")
    stages = canceler.cancel(test_tx, test_rx)
    rx = stages.linear_residual + stages.linear_estimate
    lin_db = cancellation_db(rx, stages.linear_residual)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        total_db = cancellation_db(rx, stages.total_residual)
    if np.isinf(total_db):
        warnings.warn("residual is exactly zero; cancellation is infinite", RuntimeWarning,
                      stacklevel=2)
    s = canceler.target_scale
    mse = mse_loss(_iq(stages.nonlinear_estimate) / s, _iq(stages.linear_residual) / s)
    cx = complexity_of(canceler.config)
    return CancellationReport(canceler.config.label, lin_db, total_db, mse, cx.flops_total,
                              cx.params_total, rx.size)


def _iq(z):
    z = np.asarray(z)
    return np.column_stack([z.real, z.imag])


def reports_csv(reports) -> str:
    buf = io.StringIO()
    fields = ["name", "linear_db", "total_db", "mse", "flops", "params", "n_samples"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in reports:
        row = r.as_row()
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
