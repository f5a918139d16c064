"""
Parallel-Hammerstein polynomial canceller.

The basis holds every monomial ``x[n-m]^q conj(x[n-m])^(p-q)`` with odd
``p <= P``, ``0 <= q <= p`` and ``0 <= m < M``, ordered lexicographically by
``(p, q, m)``. The plain linear term ``(q=1, p=1)`` is left out by default
because the linear canceller owns it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear import RegressorMatrix, ls_fit
from .signals import PhChannel, _rewrap, _unwrap, delayed


@dataclass(frozen=True)
class PolyBasisSpec:
    P: int = 5
    M: int = 13
    include_linear: bool = False

    def __post_init__(self):
        if self.P < 1 or self.P % 2 == 0:
            raise ValueError(f"non-linearity order P must be odd and positive, got {self.P}")
        if self.M < 1:
            raise ValueError("memory depth M must be positive")

    @property
    def branches_per_tap(self) -> int:
        """Monomials per delay: ``((P+1)/2)((P+1)/2 + 1) - 1`` without the linear term."""
        k = (self.P + 1) // 2
        return k * (k + 1) - (0 if self.include_linear else 1)

    @property
    def n_columns(self) -> int:
        return self.M * self.branches_per_tap

    def labels(self) -> tuple[tuple[int, int, int], ...]:
        """Column descriptors ``(m, q, p)`` in ``(p, q, m)`` order."""
        out = []
        for p in range(1, self.P + 1, 2):
            for q in range(p + 1):
                if p == 1 and q == 1 and not self.include_linear:
                    continue
                out.extend((m, q, p) for m in range(self.M))
        return tuple(out)


def build_ph_regressor(x, spec: PolyBasisSpec) -> RegressorMatrix:
    arr, _ = _unwrap(x)
    labels = spec.labels()
    cols = np.empty((arr.size, len(labels)), dtype=np.complex128)
    lagged = [delayed(arr, m) for m in range(spec.M)]
    conj = [np.conj(d) for d in lagged]
    for j, (m, q, p) in enumerate(labels):
        cols[:, j] = lagged[m] ** q * conj[m] ** (p - q)
    return RegressorMatrix(cols, labels)


def fit_poly(train_tx, train_residual, spec: PolyBasisSpec, *, normalize: bool = False,
             drop_transient: int = 0) -> np.ndarray:
    """LS coefficients of the PH basis for the residual left by the linear stage.

    With ``normalize=True`` each column is scaled to unit power before the
    solve and the coefficients are mapped back, which helps conditioning on
    high-PAPR inputs without changing the returned values' meaning.
    """
    X = build_ph_regressor(train_tx, spec).entries
    if not normalize:
        return ls_fit(X, train_residual, drop_transient=drop_transient)
    scale = np.sqrt(np.mean(np.abs(X) ** 2, axis=0))
    scale[scale == 0] = 1.0
    return ls_fit(X / scale, train_residual, drop_transient=drop_transient) / scale


def predict_poly(tx, coeffs, spec: PolyBasisSpec):
    coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    if coeffs.size != spec.n_columns:
        raise ValueError(f"coefficient vector has {coeffs.size} entries, basis has {spec.n_columns}")
    arr, rate = _unwrap(tx)
    return _rewrap(build_ph_regressor(arr, spec).entries @ coeffs, rate)


def to_ph_channel(coeffs, spec: PolyBasisSpec) -> PhChannel:
    """The :class:`PhChannel` that reproduces ``predict_poly`` with these coefficients."""
    coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    return PhChannel(spec.P, spec.M, dict(zip(spec.labels(), coeffs)))


def split_linear(coeffs, spec: PolyBasisSpec):
    """Separate the ``(q=1, p=1)`` taps from a basis fitted with ``include_linear``.

    Returns ``(linear_taps, nonlinear_coeffs, nonlinear_spec)``.
    """
    if not spec.include_linear:
        raise ValueError("basis has no linear columns")
    coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    labels = spec.labels()
    lin = np.array([c for (m, q, p), c in zip(labels, coeffs) if (q, p) == (1, 1)])
    rest = np.array([c for (m, q, p), c in zip(labels, coeffs) if (q, p) != (1, 1)])
    return lin, rest, PolyBasisSpec(spec.P, spec.M, include_linear=False)
