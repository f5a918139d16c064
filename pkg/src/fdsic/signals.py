"""
Baseband signal models for a full-duplex transceiver.

The transmit chain is ``x -> IQ mixer -> PA -> SI coupling channel -> rx``.
Each stage is a pure function of its input so the whole chain can be
regenerated bit-for-bit from a :class:`DatasetConfig`.

Non-linear stages are written as parallel-Hammerstein (PH) sums of odd-order
monomials ``x[n-m]**q * conj(x[n-m])**(p-q)``. History before the first sample
is taken as zero, so every operation preserves signal length.

Dataset files
-------------
A dataset called ``name`` is stored as three files::

    name.tx.csv     one "I,Q" line per sample
    name.rx.csv     same layout, same length
    name.meta.json  {"sample_rate_hz": ..., "n_samples": ..., "description": ...}

Floats are written with ``repr`` (shortest round-trip form), so
``load_dataset(save_dataset(...))`` gives back identical samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

DEFAULT_SAMPLE_RATE_HZ = 20e6


# ============================================================================
# CONTAINERS
# ============================================================================


@dataclass(frozen=True)
class ComplexSignal:
    """Complex baseband samples with a sample-rate annotation."""

    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal contains NaN or Inf samples")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.size

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)

    @property
    def power(self) -> float:
        """Mean power ``mean(|x|**2)``."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples) -> "ComplexSignal":
        return ComplexSignal(samples, self.sample_rate_hz)


def _unwrap(x, allow_empty=False):
    """Return ``(ndarray, sample_rate or None)`` for a signal or array-like."""
    if isinstance(x, ComplexSignal):
        arr, rate = x.samples, x.sample_rate_hz
    else:
        arr, rate = np.asarray(x, dtype=np.complex128).reshape(-1), None
    if arr.size == 0 and not allow_empty:
        raise ValueError("empty signal")
    return arr, rate


def _rewrap(arr, rate):
    return arr if rate is None else ComplexSignal(arr, rate)


def delayed(x: np.ndarray, m: int) -> np.ndarray:
    """``x[n - m]`` with zero history, same length as ``x``."""
    if m == 0:
        return x
    out = np.zeros_like(x)
    if m < x.size:
        out[m:] = x[: x.size - m]
    return out


# ============================================================================
# IMPAIRMENT MODELS
# ============================================================================


@dataclass(frozen=True)
class IqImbalance:
    """Transmit mixer gain (``psi``) and phase (``theta``, rad) imbalance."""

    psi: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.psi > 0:
            raise ValueError("psi must be positive")

    @property
    def coefficients(self) -> tuple[complex, complex]:
        """Direct and image coefficients ``(k1, k2)``."""
        if self.psi == 1.0 and self.theta == 0.0:
            return 1.0 + 0j, 0j
        rot = self.psi * np.exp(1j * self.theta)
        return 0.5 * (1 + rot), 0.5 * (1 - rot)


@dataclass(frozen=True)
class PhChannel:
    """Parallel-Hammerstein channel with coefficients keyed by ``(m, q, p)``.

    ``m`` is the delay (``0 <= m < M``), ``p`` the odd order (``1 <= p <= P``)
    and ``q`` the power of the non-conjugated input (``0 <= q <= p``).
    Missing keys are zero.
    """

    P: int
    M: int
    coeffs: Mapping[tuple[int, int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.P < 1 or self.P % 2 == 0:
            raise ValueError(f"non-linearity order P must be odd and positive, got {self.P}")
        if self.M < 1:
            raise ValueError("memory depth M must be positive")
        clean = {}
        for key, value in dict(self.coeffs).items():
            m, q, p = (int(k) for k in key)
            if p % 2 == 0 or not 1 <= p <= self.P:
                raise ValueError(f"order p={p} must be odd and within 1..{self.P}")
            if not 0 <= q <= p:
                raise ValueError(f"q={q} outside 0..{p}")
            if not 0 <= m < self.M:
                raise ValueError(f"delay m={m} outside 0..{self.M - 1}")
            clean[(m, q, p)] = complex(value)
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def linear(cls, taps) -> "PhChannel":
        """Pure linear FIR channel ``sum_m h_m x[n-m]``."""
        taps = np.atleast_1d(np.asarray(taps, dtype=complex))
        return cls(1, taps.size, {(m, 1, 1): h for m, h in enumerate(taps) if h != 0})

    @classmethod
    def from_branches(cls, branches: Mapping[int, "np.typing.ArrayLike"]) -> "PhChannel":
        """Build the PA form where order ``p`` uses ``q = (p+1)/2``.

        ``branches`` maps each odd order to its filter taps ``h_{m,p}``.
        """
        coeffs = {}
        P = max(branches)
        M = max(len(np.atleast_1d(t)) for t in branches.values())
        for p, taps in branches.items():
            for m, h in enumerate(np.atleast_1d(taps)):
                if h != 0:
                    coeffs[(m, (p + 1) // 2, p)] = h
        return cls(P, M, coeffs)


@dataclass(frozen=True)
class HammersteinModel:
    """Static odd polynomial ``sum_p a_p x|x|^(p-1)`` followed by one FIR filter."""

    filter_taps: tuple
    nl_coeffs: Mapping[int, complex]

    def __post_init__(self):
        taps = tuple(complex(h) for h in np.atleast_1d(self.filter_taps))
        if not taps:
            raise ValueError("filter_taps must be non-empty")
        for p in self.nl_coeffs:
            if p < 1 or p % 2 == 0:
                raise ValueError(f"non-linearity order {p} must be odd and positive")
        object.__setattr__(self, "filter_taps", taps)
        object.__setattr__(self, "nl_coeffs", {int(p): complex(a) for p, a in self.nl_coeffs.items()})

    def to_ph_channel(self) -> PhChannel:
        """Equivalent PH channel with ``h_{m,p} = h_m a_p`` in the ``q=(p+1)/2`` form."""
        branches = {p: [h * a for h in self.filter_taps] for p, a in self.nl_coeffs.items()}
        return PhChannel.from_branches(branches)


def odd_monomial(x, p: int, form: str = "abs"):
    """Odd-order basis term written either as ``x|x|^(p-1)`` or ``x^((p+1)/2) conj(x)^((p-1)/2)``.

    The two forms are algebraically identical; both are exposed so they can
    be checked against each other.
    """
    if p < 1 or p % 2 == 0:
        raise ValueError("p must be odd and positive")
    arr, rate = _unwrap(x)
    if form == "abs":
        out = arr * np.abs(arr) ** (p - 1)
    elif form == "conj":
        out = arr ** ((p + 1) // 2) * np.conj(arr) ** ((p - 1) // 2)
    else:
        raise ValueError(f"unknown form {form!r}")
    return _rewrap(out, rate)


def apply_iq_imbalance(x, imb: IqImbalance):
    """Mixer output ``k1 x + k2 conj(x)``."""
    arr, rate = _unwrap(x)
    k1, k2 = imb.coefficients
    if k2 == 0 and k1 == 1:
        return _rewrap(arr.copy(), rate)
    return _rewrap(k1 * arr + k2 * np.conj(arr), rate)


def apply_ph_model(x, ch: PhChannel):
    """Evaluate the parallel-Hammerstein sum over every stored coefficient.

    Parameters
    ----------
    x : ComplexSignal or array_like
        Input samples, at least ``ch.M`` long.
    ch : PhChannel
        Coefficients ``h_{m,q,p}``.

    Returns
    -------
    Same type as ``x``; ``y[n] = sum h_{m,q,p} x[n-m]^q conj(x[n-m])^(p-q)``.
    """
    arr, rate = _unwrap(x)
    if arr.size < ch.M:
        raise ValueError(f"signal length {arr.size} shorter than channel memory {ch.M}")
    y = np.zeros_like(arr)
    cache: dict[int, np.ndarray] = {}
    for (m, q, p), h in sorted(ch.coeffs.items()):
        if h == 0:
            continue
        if m not in cache:
            cache[m] = delayed(arr, m)
        d = cache[m]
        y += h * d**q * np.conj(d) ** (p - q)
    return _rewrap(y, rate)


def apply_hammerstein(x, hm: HammersteinModel):
    arr, rate = _unwrap(x)
    taps = np.asarray(hm.filter_taps)
    if arr.size < taps.size:
        raise ValueError(f"signal length {arr.size} shorter than filter length {taps.size}")
    static = np.zeros_like(arr)
    for p, a in hm.nl_coeffs.items():
        static += a * arr * np.abs(arr) ** (p - 1)
    return _rewrap(np.convolve(static, taps)[: arr.size], rate)


# ============================================================================
# SYNTHETIC DATA
# ============================================================================


def qpsk_ofdm(n_samples: int, rng: np.random.Generator, n_fft: int = 1024,
              n_active: int = 512, cp_len: int = 0) -> np.ndarray:
    """Unit-power QPSK-modulated OFDM baseband samples.

    ``n_active`` sub-carriers around DC (DC itself left empty) carry Gray-mapped
    QPSK symbols; with ``n_fft=1024`` at 20 MHz, 512 active carriers occupy
    10 MHz. Symbols are concatenated (optional cyclic prefix) and truncated
    to ``n_samples``. The result is scaled to unit mean power.
    """
    if n_active > n_fft - 1 or n_active % 2:
        raise ValueError("n_active must be even and smaller than n_fft")
    half = n_active // 2
    active = np.r_[1 : half + 1, n_fft - half : n_fft]
    sym_len = n_fft + cp_len
    n_sym = -(-n_samples // sym_len)
    bits = rng.integers(0, 2, size=(n_sym, n_active, 2))
    grid = np.zeros((n_sym, n_fft), dtype=np.complex128)
    grid[:, active] = ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2)
    body = np.fft.ifft(grid, axis=1)
    if cp_len:
        body = np.concatenate([body[:, -cp_len:], body], axis=1)
    x = body.reshape(-1)[:n_samples]
    return x / np.sqrt(np.mean(np.abs(x) ** 2))


def default_pa() -> PhChannel:
    """Mildly non-linear 3-tap PA (5th order), third-order branch about 30 dB down."""
    return PhChannel.from_branches({
        1: [1.0, 0.08 + 0.03j, -0.02j],
        3: [-0.012 + 0.006j, 0.003 - 0.002j],
        5: [0.0012 - 0.0008j],
    })


def default_si_channel() -> PhChannel:
    """Fixed 11-tap linear coupling channel with exponentially decaying taps."""
    m = np.arange(11)
    taps = 0.55**m * np.exp(1j * (0.9 * m + 0.4))
    taps[3] *= -1.3
    return PhChannel.linear(taps / np.linalg.norm(taps))


@dataclass(frozen=True)
class DatasetConfig:
    """Everything needed to regenerate a synthetic (tx, rx) pair.

    ``noise_floor_dbc`` adds circular complex Gaussian noise at that power
    relative to the SI power; ``None`` means noiseless. ``analog_suppression_db``
    attenuates the received SI by a scalar, standing in for passive RF
    isolation.
    """

    n_samples: int = 20480
    seed: int = 0
    iq: IqImbalance = IqImbalance(0.98, 0.01)
    pa: PhChannel = field(default_factory=default_pa)
    si_channel: PhChannel = field(default_factory=default_si_channel)
    noise_floor_dbc: float | None = None
    split_ratio: float = 0.9
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    analog_suppression_db: float = 0.0
    n_fft: int = 1024
    n_active: int = 512
    cp_len: int = 0

    def __post_init__(self):
        if not 0 < self.split_ratio < 1:
            raise ValueError("split_ratio must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def memory(self) -> int:
        """Memory of the composite tx -> rx response."""
        return self.pa.M + self.si_channel.M - 1


def generate_dataset(cfg: DatasetConfig) -> tuple[ComplexSignal, ComplexSignal]:
    """Generate ``(tx, rx)`` by running the impairment chain on a QPSK-OFDM frame.

    Random streams come from numpy's PCG64 seeded through ``SeedSequence(cfg.seed)``;
    symbols and noise use independent child streams, so toggling noise does
    not change ``tx``.
    """
    if cfg.n_samples < max(cfg.memory, 2):
        raise ValueError(f"n_samples too small: {cfg.n_samples} < model memory {cfg.memory}")
    sym_seq, noise_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    x = qpsk_ofdm(cfg.n_samples, np.random.default_rng(sym_seq), cfg.n_fft, cfg.n_active, cfg.cp_len)
    y = apply_ph_model(apply_ph_model(apply_iq_imbalance(x, cfg.iq), cfg.pa), cfg.si_channel)
    if cfg.analog_suppression_db:
        y = y * 10 ** (-cfg.analog_suppression_db / 20)
    if cfg.noise_floor_dbc is not None:
        rng = np.random.default_rng(noise_seq)
        sigma2 = np.mean(np.abs(y) ** 2) * 10 ** (cfg.noise_floor_dbc / 10)
        noise = rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size)
        y = y + np.sqrt(sigma2 / 2) * noise
    return ComplexSignal(x, cfg.sample_rate_hz), ComplexSignal(y, cfg.sample_rate_hz)


DATASET_PRESETS = ("noisy", "noiseless", "linear", "transparent")


def dataset_preset(name: str, n_samples: int = 20480, seed: int = 0) -> DatasetConfig:
    """Named synthetic dataset configurations.

    noisy
        Default impairments, 53 dB analog suppression and a receiver noise
        floor at -45 dBc. The linear canceller reaches about 37 dB and the
        noise caps full cancellation near 45 dB.
    noiseless
        Default impairments without noise.
    linear
        Ideal mixer and linear PA; only the linear coupling channel remains.
    transparent
        Every stage is the identity, so ``rx == tx``.
    """
    if name == "noisy":
        return DatasetConfig(n_samples=n_samples, seed=seed, noise_floor_dbc=-45.0,
                             analog_suppression_db=53.0)
    if name == "noiseless":
        return DatasetConfig(n_samples=n_samples, seed=seed)
    if name == "linear":
        return DatasetConfig(n_samples=n_samples, seed=seed, iq=IqImbalance(),
                             pa=PhChannel.linear([1.0]))
    if name == "transparent":
        unit = PhChannel.linear([1.0])
        return DatasetConfig(n_samples=n_samples, seed=seed, iq=IqImbalance(), pa=unit,
                             si_channel=unit)
    raise ValueError(f"unknown dataset preset {name!r}; choose from {DATASET_PRESETS}")


def split_dataset(tx, rx, ratio: float = 0.9):
    """Contiguous split: the first ``floor(ratio * N)`` samples train, the rest test."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    tx_arr, rate = _unwrap(tx)
    rx_arr, _ = _unwrap(rx)
    if tx_arr.size != rx_arr.size:
        raise ValueError(f"length mismatch: tx has {tx_arr.size} samples, rx has {rx_arr.size}")
    n = tx_arr.size
    n_train = math.floor(ratio * n + 1e-9)
    if n_train == 0 or n_train == n:
        raise ValueError(f"degenerate split: ratio {ratio} on {n} samples leaves an empty side")
    return (_rewrap(tx_arr[:n_train], rate), _rewrap(rx_arr[:n_train], rate),
            _rewrap(tx_arr[n_train:], rate), _rewrap(rx_arr[n_train:], rate))


# ============================================================================
# FILE I/O
# ============================================================================


def dataset_stem(path) -> Path:
    """Strip any of the dataset suffixes from ``path``."""
    path = Path(path)
    name = path.name
    for suffix in (".meta.json", ".meta", ".tx.csv", ".rx.csv"):
        if name.endswith(suffix):
            return path.with_name(name[: -len(suffix)])
    return path


def write_iq_csv(path, samples) -> None:
    arr, _ = _unwrap(samples, allow_empty=True)
    lines = [f"{float(v.real)!r},{float(v.imag)!r}\n" for v in arr]
    Path(path).write_text("".join(lines))


def read_iq_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing sample file {path}")
    values = []
    for i, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"malformed row {i} in {path}: expected 'I,Q', got {line!r}")
        try:
            values.append(complex(float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValueError(f"malformed row {i} in {path}: {line!r}") from None
    return np.array(values, dtype=np.complex128)


def save_dataset(path, tx, rx, description: str = "") -> Path:
    """Write ``path.tx.csv``, ``path.rx.csv`` and ``path.meta.json``; return the stem."""
    stem = dataset_stem(path)
    tx_arr, rate = _unwrap(tx)
    rx_arr, _ = _unwrap(rx)
    if tx_arr.size != rx_arr.size:
        raise ValueError(f"length mismatch: tx has {tx_arr.size} samples, rx has {rx_arr.size}")
    stem.parent.mkdir(parents=True, exist_ok=True)
    write_iq_csv(f"{stem}.tx.csv", tx_arr)
    write_iq_csv(f"{stem}.rx.csv", rx_arr)
    meta = {
        "sample_rate_hz": rate if rate is not None else DEFAULT_SAMPLE_RATE_HZ,
        "n_samples": int(tx_arr.size),
        "description": description,
    }
    Path(f"{stem}.meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return stem


def load_dataset(path) -> tuple[ComplexSignal, ComplexSignal]:
    """Read a dataset written by :func:`save_dataset` (or by hand in the same layout)."""
    stem = dataset_stem(path)
    meta_path = Path(f"{stem}.meta.json")
    if not meta_path.exists():
        raise FileNotFoundError(f"missing metadata file {meta_path}")
    meta = json.loads(meta_path.read_text())
    if "sample_rate_hz" not in meta:
        raise ValueError(f"metadata {meta_path} lacks 'sample_rate_hz'")
    tx = read_iq_csv(f"{stem}.tx.csv")
    rx = read_iq_csv(f"{stem}.rx.csv")
    if tx.size != rx.size:
        raise ValueError(f"length mismatch: tx has {tx.size} samples, rx has {rx.size}")
    if "n_samples" in meta and int(meta["n_samples"]) != tx.size:
        raise ValueError(f"length mismatch: metadata says {meta['n_samples']} samples, files hold {tx.size}")
    if tx.size == 0:
        raise ValueError("empty signal")
    rate = float(meta["sample_rate_hz"])
    return ComplexSignal(tx, rate), ComplexSignal(rx, rate)
