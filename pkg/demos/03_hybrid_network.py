"""
Training the hybrid conv/recurrent canceller
============================================

The network sees a 13 x 2 graph of past transmit samples. Three 12 x 1
filters turn it into 2 x 2 feature maps, the maps are unrolled into a
two-step sequence, and a 9-unit recurrent layer plus a linear output predict
the I/Q of the linear stage's residual.
"""

import numpy as np

from fdsic.architectures import build_network, preset
from fdsic.metrics import evaluate_canceler
from fdsic.pipeline import fit_canceler
from fdsic.signals import dataset_preset, generate_dataset, split_dataset

cfg = preset("hcrnn_opt")
net = build_network(cfg, rng=0)
x = np.zeros((1, cfg.M, 2))
print("layer shapes")
for layer in net.layers:
    x = layer.forward(x)
    print(f"  {layer.kind:9s} -> {x.shape[1:]}")
print(f"{net.n_params} trainable parameters")

tx, rx = generate_dataset(dataset_preset("noisy", n_samples=20480, seed=0))
train_tx, train_rx, test_tx, test_rx = split_dataset(tx, rx)

poly = evaluate_canceler(fit_canceler("poly_p5", train_tx, train_rx), test_tx, test_rx)
print(f"\npoly_p5 reference: {poly.total_db:.2f} dB")

results = []
for seed in range(3):
    c = fit_canceler(cfg, train_tx, train_rx, seed=seed, validation=(test_tx, test_rx),
                     epochs=20)
    rep = evaluate_canceler(c, test_tx, test_rx)
    results.append(rep.total_db)
    h = c.history
    print(f"seed {seed}: {rep.total_db:.2f} dB, best epoch {h.best_epoch}, "
          f"train mse {h.initial_train_mse:.3g} -> {h.final_train_mse:.3g}")
print(f"mean over inits {np.mean(results):.2f} dB "
      f"(linear stage alone {rep.linear_db:.2f} dB)")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(h.train_mse, label="train")
    ax.semilogy(h.test_mse, label="test")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (normalised)")
    ax.legend()
    fig.tight_layout()
    fig.savefig("hcrnn_learning_curve.png", dpi=120)
    print("saved hcrnn_learning_curve.png")
