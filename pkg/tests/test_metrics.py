import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdsic.metrics import cancellation_db, psd_welch
from fdsic.signals import ComplexSignal


def cplx(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def test_identical_residual_is_zero_db(rng):
    y = cplx(rng, 100)
    assert cancellation_db(y, y) == 0.0


def test_unit_power_example():
    assert cancellation_db(np.ones(4), np.full(4, 0.1)) == pytest.approx(20.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 400), st.integers(0, 2**32 - 1), st.floats(-6, 3))
def test_tenfold_attenuation_adds_twenty_db(n, seed, log_scale):
    rng = np.random.default_rng(seed)
    y, r = cplx(rng, n), 10**log_scale * cplx(rng, n)
    assert cancellation_db(y, r / 10) - cancellation_db(y, r) == pytest.approx(20.0, abs=1e-12)


def test_power_of_two_scaling_is_exact(rng):
    y, r = cplx(rng, 64), cplx(rng, 64)
    # halving in binary is exact, so the sums scale by exactly 4
    assert cancellation_db(y, r / 2) - cancellation_db(y, r) == pytest.approx(
        10 * np.log10(4), abs=1e-13)


def test_matches_direct_sum(rng):
    y, r = cplx(rng, 37), cplx(rng, 37)
    num = sum(abs(v) ** 2 for v in y)
    den = sum(abs(v) ** 2 for v in r)
    assert cancellation_db(y, r) == pytest.approx(10 * np.log10(num / den), rel=1e-13)


def test_zero_residual_is_infinite_with_warning(rng):
    with pytest.warns(RuntimeWarning, match="zero"):
        assert cancellation_db(cplx(rng, 5), np.zeros(5)) == float("inf")


def test_cancellation_errors(rng):
    with pytest.raises(ValueError, match="zero SI power"):
        cancellation_db(np.zeros(5), cplx(rng, 5))
    with pytest.raises(ValueError, match="length mismatch"):
        cancellation_db(cplx(rng, 5), cplx(rng, 4))


def test_accepts_complex_signal(rng):
    y = cplx(rng, 20)
    assert cancellation_db(ComplexSignal(y, 10e6), y / 10) == pytest.approx(20, abs=1e-12)


# PSD ------------------------------------------------------------------------

def test_tone_peak_at_its_frequency():
    fs, N = 1000.0, 8192
    f0 = 125.0
    x = np.exp(2j * np.pi * f0 * np.arange(N) / fs) + 1e-3 * cplx(np.random.default_rng(1), N)
    est = psd_welch(x, 1024, sample_rate_hz=fs)
    k = int(np.argmax(est.psd))
    assert abs(est.freqs_hz[k] - f0) <= est.bin_width_hz
    floor = np.median(est.psd)
    assert 10 * np.log10(est.psd[k] / floor) >= 40


def test_negative_tone_lands_on_negative_frequency():
    n = np.arange(4096)
    est = psd_welch(np.exp(-2j * np.pi * 0.25 * n), 256)
    assert est.freqs_hz[int(np.argmax(est.psd))] == pytest.approx(-0.25)


def test_white_noise_is_flat(rng):
    x = cplx(rng, 2**17)
    est = psd_welch(x, 256)
    db = 10 * np.log10(est.psd)
    assert np.max(np.abs(db - np.mean(db))) <= 3.0
    # unit-variance per component, so density 2 / fs
    assert np.mean(est.psd) == pytest.approx(2.0, rel=0.02)


def test_parseval_boxcar_without_overlap(rng):
    x = cplx(rng, 4096)
    est = psd_welch(x, 512, overlap=0, window="boxcar", sample_rate_hz=20e6)
    assert est.total_power == pytest.approx(np.mean(np.abs(x) ** 2), rel=1e-10)


def test_parseval_default_settings(rng):
    x = 0.3 * cplx(rng, 20480)
    est = psd_welch(x)
    assert est.total_power == pytest.approx(np.mean(np.abs(x) ** 2), rel=0.01)


def test_frequency_grid():
    est = psd_welch(np.ones(64, complex), 16, sample_rate_hz=16.0)
    assert est.freqs_hz.size == 16 and np.all(np.diff(est.freqs_hz) > 0)
    assert est.freqs_hz[0] == -8.0 and est.bin_width_hz == 1.0


def test_sample_rate_from_signal(rng):
    est = psd_welch(ComplexSignal(cplx(rng, 256), 10e6), 64)
    assert est.sample_rate_hz == 10e6


@pytest.mark.parametrize("seg, ov", [(0, None), (300, None), (64, 64), (64, -1)])
def test_degenerate_segmentation(rng, seg, ov):
    with pytest.raises(ValueError):
        psd_welch(cplx(rng, 256), seg, overlap=ov)


def test_band_power_and_csv(rng):
    est = psd_welch(cplx(rng, 4096), 256)
    assert est.band_power_db() == pytest.approx(10 * np.log10(2 / 256), abs=0.5)
    lines = est.to_csv().splitlines()
    assert lines[0] == "freq_hz,psd_per_hz,power_dbm_per_bin" and len(lines) == 257
    with pytest.raises(ValueError):
        est.band_power_db(-1.0)
