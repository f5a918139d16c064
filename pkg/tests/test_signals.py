import itertools
import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdsic.signals import (ComplexSignal, DatasetConfig, HammersteinModel, IqImbalance, PhChannel,
                           apply_hammerstein, apply_iq_imbalance, apply_ph_model, dataset_preset,
                           generate_dataset, load_dataset, odd_monomial, qpsk_ofdm, save_dataset,
                           split_dataset)


def random_complex(rng, n, scale=1.0):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def test_complex_signal_is_immutable_and_validated():
    s = ComplexSignal([1, 2j])
    assert len(s) == 2 and s.sample_rate_hz == 20e6
    with pytest.raises(ValueError):
        s.samples[0] = 3
    with pytest.raises(ValueError):
        ComplexSignal([1, np.nan])
    with pytest.raises(ValueError):
        ComplexSignal([1], sample_rate_hz=0)


# IQ imbalance ---------------------------------------------------------------

def test_iq_identity():
    assert IqImbalance().coefficients == (1, 0)
    np.testing.assert_array_equal(apply_iq_imbalance([1 + 2j], IqImbalance()), [1 + 2j])


def test_iq_real_input_zero_phase():
    out = apply_iq_imbalance([1 + 0j], IqImbalance(psi=0.7, theta=0.0))
    assert out[0] == pytest.approx(1 + 0j, abs=1e-15)


def test_iq_against_high_precision_scalar():
    psi, theta = 0.9, 0.1
    x = mpmath.mpc(0, 1)
    rot = psi * mpmath.expj(theta)
    ref = 0.5 * (1 + rot) * x + 0.5 * (1 - rot) * mpmath.conj(x)
    out = apply_iq_imbalance([1j], IqImbalance(psi, theta))[0]
    assert abs(out - complex(ref)) < 1e-15


def test_iq_empty_signal():
    with pytest.raises(ValueError, match="empty signal"):
        apply_iq_imbalance([], IqImbalance())


def test_iq_rejects_nonpositive_psi():
    with pytest.raises(ValueError):
        IqImbalance(psi=0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_iq_identity_on_any_signal(n, seed):
    x = random_complex(np.random.default_rng(seed), n)
    np.testing.assert_array_equal(apply_iq_imbalance(x, IqImbalance(1.0, 0.0)), x)


# PH model -------------------------------------------------------------------

def naive_ph(x, ch):
    y = np.zeros(len(x), dtype=complex)
    for n in range(len(x)):
        for (m, q, p), h in ch.coeffs.items():
            if n - m < 0:
                continue
            v = x[n - m]
            y[n] += h * v**q * np.conj(v) ** (p - q)
    return y


def test_ph_unit_linear_tap_is_identity(rng):
    x = random_complex(rng, 20)
    np.testing.assert_array_equal(apply_ph_model(x, PhChannel(1, 1, {(0, 1, 1): 1})), x)


def test_ph_scaling_by_single_linear_coefficient(rng):
    x = random_complex(rng, 20)
    c = 0.3 - 1.2j
    np.testing.assert_allclose(apply_ph_model(x, PhChannel(1, 1, {(0, 1, 1): c})), c * x,
                               rtol=1e-15)


def test_ph_single_cubic_monomial():
    a = 0.4 - 0.9j
    out = apply_ph_model([a], PhChannel(3, 1, {(0, 2, 3): 1}))
    assert out[0] == pytest.approx(a * a * np.conj(a), rel=1e-15)
    assert out[0] == pytest.approx(a * abs(a) ** 2, rel=1e-14)


def test_ph_matches_triple_loop_oracle():
    rng = np.random.default_rng(7)
    x = random_complex(rng, 64)
    coeffs = {(m, q, p): complex(*rng.standard_normal(2))
              for p in (1, 3) for q in range(p + 1) for m in range(2)}
    ch = PhChannel(3, 2, coeffs)
    np.testing.assert_allclose(apply_ph_model(x, ch), naive_ph(x, ch), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("key", [(0, 1, 2), (0, 4, 3), (2, 1, 1), (0, 1, 7)])
def test_ph_rejects_bad_keys(key):
    with pytest.raises(ValueError):
        PhChannel(5, 2, {key: 1.0})


def test_ph_rejects_even_order():
    with pytest.raises(ValueError):
        PhChannel(4, 2)


def test_ph_short_signal():
    with pytest.raises(ValueError):
        apply_ph_model([1, 2], PhChannel.linear([1, 0, 0.5]))


def test_ph_preserves_signal_type():
    s = ComplexSignal(np.ones(5), 10e6)
    out = apply_ph_model(s, PhChannel.linear([1, 0.5]))
    assert isinstance(out, ComplexSignal) and out.sample_rate_hz == 10e6


# Hammerstein ----------------------------------------------------------------

def test_hammerstein_identity(rng):
    x = random_complex(rng, 10)
    np.testing.assert_allclose(apply_hammerstein(x, HammersteinModel([1], {1: 1})), x, rtol=1e-15)


def test_hammerstein_cubic():
    out = apply_hammerstein([2 + 0j], HammersteinModel([1], {3: 1}))
    assert out[0] == 8


def test_hammerstein_rejects_even_order():
    with pytest.raises(ValueError):
        HammersteinModel([1], {2: 1})


def random_hammerstein(rng):
    M = int(rng.integers(1, 6))
    P = int(rng.choice([1, 3, 5, 7]))
    taps = random_complex(rng, M)
    nl = {p: complex(*rng.standard_normal(2)) for p in range(1, P + 1, 2)}
    return HammersteinModel(taps, nl)


def test_hammerstein_to_ph_equivalence_100_cases():
    rng = np.random.default_rng(50)
    for _ in range(100):
        hm = random_hammerstein(rng)
        x = random_complex(rng, 40, scale=0.7)
        a = apply_hammerstein(x, hm)
        b = apply_ph_model(x, hm.to_ph_channel())
        np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-12 * np.max(np.abs(a)))


def test_monomial_identity_100_cases():
    rng = np.random.default_rng(51)
    for _ in range(100):
        p = int(rng.choice([1, 3, 5, 7, 9]))
        x = random_complex(rng, 32, scale=rng.uniform(0.1, 2))
        np.testing.assert_allclose(odd_monomial(x, p, "conj"), odd_monomial(x, p, "abs"),
                                   rtol=1e-12)


# dataset generation ---------------------------------------------------------

def test_qpsk_ofdm_unit_power_no_dc():
    x = qpsk_ofdm(4096, np.random.default_rng(0))
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=1e-12)
    spec = np.fft.fft(x[:1024])
    assert abs(spec[0]) < 1e-9 * np.max(np.abs(spec))
    # only the middle half of the band is occupied
    assert np.max(np.abs(spec[300:700])) < 1e-9 * np.max(np.abs(spec))


def test_transparent_chain():
    tx, rx = generate_dataset(dataset_preset("transparent", n_samples=256))
    np.testing.assert_array_equal(rx.samples, tx.samples)


def test_generation_is_deterministic():
    cfg = dataset_preset("noisy", n_samples=2048, seed=3)
    a = generate_dataset(cfg)
    b = generate_dataset(cfg)
    np.testing.assert_array_equal(a[0].samples, b[0].samples)
    np.testing.assert_array_equal(a[1].samples, b[1].samples)


def test_noise_does_not_change_tx():
    a = generate_dataset(DatasetConfig(n_samples=512, seed=4))
    b = generate_dataset(DatasetConfig(n_samples=512, seed=4, noise_floor_dbc=-30))
    np.testing.assert_array_equal(a[0].samples, b[0].samples)
    noise = b[1].samples - a[1].samples
    ratio_db = 10 * np.log10(np.mean(np.abs(noise) ** 2) / np.mean(np.abs(a[1].samples) ** 2))
    assert ratio_db == pytest.approx(-30, abs=0.5)


def test_generation_rejects_short_dataset():
    with pytest.raises(ValueError, match="n_samples too small"):
        generate_dataset(DatasetConfig(n_samples=4))


def test_default_nonlinear_floor_below_linear():
    tx, rx = generate_dataset(dataset_preset("noiseless", n_samples=8192))
    lin_only = generate_dataset(DatasetConfig(n_samples=8192, iq=IqImbalance(),
                                              pa=PhChannel.linear([1.0, 0.08 + 0.03j, -0.02j])))[1]
    gap = 10 * np.log10(np.sum(np.abs(rx.samples) ** 2)
                        / np.sum(np.abs(rx.samples - lin_only.samples) ** 2))
    assert 30 < gap < 50


# splitting and files --------------------------------------------------------

@pytest.mark.parametrize("n, ratio, expect", [(20480, 0.9, (18432, 2048)), (10, 0.5, (5, 5)),
                                              (10, 0.99, (9, 1))])
def test_split_sizes(n, ratio, expect):
    x = np.arange(n, dtype=complex)
    tr, _, te, _ = split_dataset(x, x, ratio)
    assert (len(tr), len(te)) == expect
    np.testing.assert_array_equal(np.concatenate([tr, te]), x)


def test_split_errors():
    x = np.ones(10)
    with pytest.raises(ValueError, match="degenerate split"):
        split_dataset(x, x, 0.01)
    with pytest.raises(ValueError, match="length mismatch"):
        split_dataset(x, x[:9], 0.5)


def test_save_load_round_trip(tmp_path):
    tx, rx = generate_dataset(dataset_preset("noisy", n_samples=300, seed=9))
    stem = save_dataset(tmp_path / "d", tx, rx, "test")
    tx2, rx2 = load_dataset(f"{stem}.meta.json")
    np.testing.assert_array_equal(tx2.samples, tx.samples)
    np.testing.assert_array_equal(rx2.samples, rx.samples)
    assert tx2.sample_rate_hz == tx.sample_rate_hz


def test_load_three_known_rows(tmp_path):
    (tmp_path / "k.tx.csv").write_text("1.5,-2\n0,0.25\n-3e-3,7\n")
    (tmp_path / "k.rx.csv").write_text("0,0\n0,0\n0,0\n")
    (tmp_path / "k.meta.json").write_text(json.dumps({"sample_rate_hz": 1e6}))
    tx, _ = load_dataset(tmp_path / "k")
    np.testing.assert_array_equal(tx.samples, [1.5 - 2j, 0.25j, -3e-3 + 7j])
    assert tx.sample_rate_hz == 1e6


def test_load_errors(tmp_path):
    tx = "\n".join(["1,0"] * 100) + "\n"
    rx = "\n".join(["1,0"] * 99) + "\n"
    (tmp_path / "a.tx.csv").write_text(tx)
    (tmp_path / "a.rx.csv").write_text(rx)
    with pytest.raises(FileNotFoundError, match="metadata"):
        load_dataset(tmp_path / "a")
    (tmp_path / "a.meta.json").write_text(json.dumps({"sample_rate_hz": 1.0}))
    with pytest.raises(ValueError, match="length mismatch"):
        load_dataset(tmp_path / "a")
    (tmp_path / "a.rx.csv").write_text(tx.replace("1,0", "1;0", 1))
    with pytest.raises(ValueError, match="malformed row"):
        load_dataset(tmp_path / "a")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6, allow_nan=False),
                          st.floats(-1e6, 1e6, allow_nan=False)), min_size=1, max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, pairs):
    d = tmp_path_factory.mktemp("rt")
    x = np.array([complex(a, b) for a, b in pairs])
    stem = save_dataset(d / "p", x, x)
    tx, _ = load_dataset(stem)
    np.testing.assert_array_equal(tx.samples, x)


def test_enumerated_index_set_accepted():
    keys = [(m, q, p) for p in (1, 3, 5) for q in range(p + 1) for m in range(3)]
    ch = PhChannel(5, 3, {k: 1.0 for k in keys})
    assert len(ch.coeffs) == len(keys) == len(set(itertools.product(range(3), range(6), (1, 3, 5)))
                                                    & set(keys))
