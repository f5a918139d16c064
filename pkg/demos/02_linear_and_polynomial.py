"""
Linear and polynomial cancellation on synthetic data
====================================================

We synthesise an OFDM transmit signal, push it through IQ imbalance, a
memory PA and a multipath SI channel, and add a receiver noise floor. The
least-squares canceller removes the linear part; the parallel-Hammerstein
basis then models what the PA and the IQ mixer left behind.
"""

import numpy as np

from fdsic.metrics import evaluate_canceler, psd_welch
from fdsic.pipeline import fit_canceler
from fdsic.signals import dataset_preset, generate_dataset, split_dataset

tx, rx = generate_dataset(dataset_preset("noisy", n_samples=20480, seed=0))
train_tx, train_rx, test_tx, test_rx = split_dataset(tx, rx)
print(f"{len(tx)} samples, {len(train_tx)} for fitting and {len(test_tx)} held out")

reports = {}
stages = {}
for name in ("linear", "poly_p5"):
    canceller = fit_canceler(name, train_tx, train_rx)
    reports[name] = evaluate_canceler(canceller, test_tx, test_rx)
    stages[name] = canceller.cancel(test_tx, test_rx)
    r = reports[name]
    print(f"{name:8s} total {r.total_db:6.2f} dB  ({r.params} params, {r.flops} FLOPs)")

# The noiseless chain shows the basis can represent the impairments exactly.
tx0, rx0 = generate_dataset(dataset_preset("noiseless", n_samples=20480, seed=0))
split0 = split_dataset(tx0, rx0)
clean = evaluate_canceler(fit_canceler("poly_p5", *split0[:2]), *split0[2:])
print(f"noiseless chain, poly_p5: {clean.total_db:.1f} dB")

# Spectra of the received SI, the linear residual and the full residual.
st = stages["poly_p5"]
curves = {
    "received SI": st.linear_residual + st.linear_estimate,
    "after linear": st.linear_residual,
    "after poly_p5": st.total_residual,
}
estimates = {k: psd_welch(v, 1024, sample_rate_hz=20e6) for k, v in curves.items()}
for k, est in estimates.items():
    print(f"{k:14s} in-band power {est.band_power_db():7.2f} dB per bin")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for k, est in estimates.items():
        ax.plot(est.freqs_hz / 1e6, est.power_dbm_per_bin, label=k, lw=0.8)
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("power per bin (dB)")
    ax.legend()
    fig.tight_layout()
    fig.savefig("psd_linear_poly.png", dpi=120)
    print("saved psd_linear_poly.png")
