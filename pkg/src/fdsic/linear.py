"""Least-squares linear SI canceller (memory-``M`` FIR replica of the coupling path)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .signals import _rewrap, _unwrap, delayed

#: condition number above which ``ls_fit`` switches to a ridge-regularised solve
RIDGE_CONDITION = 1e12
RIDGE_SCALE = 1e-10


class IllConditionedError(np.linalg.LinAlgError):
    """The regressor cannot be solved even with ridge regularisation."""


@dataclass(frozen=True)
class RegressorMatrix:
    """``N x K`` complex regressor with one descriptor per column."""

    entries: np.ndarray
    column_labels: tuple

    def __post_init__(self):
        if self.entries.ndim != 2:
            raise ValueError("regressor must be two-dimensional")
        if self.entries.shape[1] != len(self.column_labels):
            raise ValueError("column count does not match label count")

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class LinearTaps:
    h: np.ndarray

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=np.complex128)).copy()
        if h.size < 1 or not np.all(np.isfinite(h)):
            raise ValueError("taps must be a non-empty finite vector")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def M(self) -> int:
        return self.h.size


def build_linear_regressor(x, M: int) -> RegressorMatrix:
    """Row ``n``, column ``m`` holds ``x[n-m]`` (zeros before the first sample)."""
    if M <= 0:
        raise ValueError("memory M must be positive")
    arr, _ = _unwrap(x)
    cols = np.column_stack([delayed(arr, m) for m in range(M)])
    return RegressorMatrix(cols, tuple(range(M)))


def ls_fit(X, y, *, drop_transient: int = 0) -> np.ndarray:
    """Least-squares coefficients minimising ``||y - X h||^2``.

    Solved through a QR factorisation rather than the normal equations. If
    the condition number exceeds ``RIDGE_CONDITION`` a ridge term
    ``lambda = 1e-10 * trace(X^H X) / K`` is added and a warning issued.

    Parameters
    ----------
    X : RegressorMatrix or ndarray
        ``N x K`` regressor, ``N >= K``.
    y : ComplexSignal or array_like
        Length-``N`` target.
    drop_transient : int
        Leading rows excluded from the fit (e.g. ``M - 1`` to skip the
        zero-padded start-up rows).
    """
    A = X.entries if isinstance(X, RegressorMatrix) else np.asarray(X, dtype=np.complex128)
    b, _ = _unwrap(y)
    if A.shape[0] != b.size:
        raise ValueError(f"regressor has {A.shape[0]} rows but target has {b.size} samples")
    A, b = A[drop_transient:], b[drop_transient:]
    N, K = A.shape
    if N < K:
        raise ValueError(f"underdetermined fit: {N} rows for {K} unknowns")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite values in regressor or target")

    gram_trace = float(np.sum(np.abs(A) ** 2))
    if gram_trace == 0.0:
        raise IllConditionedError("ill-conditioned regressor: all columns are zero")
    s = np.linalg.svd(A, compute_uv=False)
    cond = s[0] / s[-1] if s[-1] > 0 else np.inf
    if cond > RIDGE_CONDITION:
        lam = RIDGE_SCALE * gram_trace / K
        warnings.warn(f"regressor condition number {cond:.3g} exceeds {RIDGE_CONDITION:.0e}; "
                      f"adding ridge lambda={lam:.3g}", RuntimeWarning, stacklevel=2)
        A = np.vstack([A, np.sqrt(lam) * np.eye(K)])
        b = np.concatenate([b, np.zeros(K, dtype=b.dtype)])
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.min() <= np.finfo(float).eps * diag.max() * max(A.shape):
        raise IllConditionedError("ill-conditioned regressor")
    return np.linalg.solve(R, Q.conj().T @ b) if K > 1 else (Q.conj().T @ b) / R[0, 0]


def fit_linear(tx, rx, M: int, *, drop_transient: bool = False) -> LinearTaps:
    """Fit ``M`` linear taps from transmitted to received samples."""
    X = build_linear_regressor(tx, M)
    return LinearTaps(ls_fit(X, rx, drop_transient=M - 1 if drop_transient else 0))


def predict_linear(x, taps):
    """Linear replica ``sum_m h_m x[n-m]``; accepts ``LinearTaps`` or a tap vector."""
    arr, rate = _unwrap(x)
    h = taps.h if isinstance(taps, LinearTaps) else np.atleast_1d(np.asarray(taps, dtype=complex))
    return _rewrap(np.convolve(arr, h)[: arr.size], rate)
