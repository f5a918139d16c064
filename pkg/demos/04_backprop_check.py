"""
Checking backpropagation by finite differences
==============================================

Every layer implements its own backward pass. A central difference of the
loss against each parameter gives an independent estimate of the gradient;
the two should agree to many digits away from ReLU kinks.
"""

import numpy as np

from fdsic.architectures import build_network, preset
from fdsic.nn import loss_and_gradients, mse_loss

rng = np.random.default_rng(0)
net = build_network(preset("hcrdnn1"), rng=rng)
x = rng.uniform(-1, 1, (8, 13, 2))
y = rng.uniform(-1, 1, (8, 2))

# Biases start at zero, so an all-zero feature row puts a recurrent
# pre-activation exactly on the ReLU kink, where the two sides disagree.
# Jitter every parameter slightly to step off it.
net.set_flat(net.get_flat() + 1e-3 * rng.standard_normal(net.n_params))

loss_and_gradients(net, x, y)
analytic = np.concatenate([g.ravel() for g in net.grads])

theta = net.get_flat()
numeric = np.empty_like(theta)
eps = 1e-5
for i in range(theta.size):
    keep = theta[i]
    theta[i] = keep + eps
    net.set_flat(theta)
    up = mse_loss(net.forward(x), y)
    theta[i] = keep - eps
    net.set_flat(theta)
    down = mse_loss(net.forward(x), y)
    theta[i] = keep
    numeric[i] = (up - down) / (2 * eps)
net.set_flat(theta)

err = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-7)
print(f"{theta.size} parameters, worst relative error {err.max():.2e}")
offset = 0
for layer in net.layers:
    n = sum(p.size for p in layer.params)
    if n:
        print(f"  {layer.kind:9s} {n:4d} params, max error {err[offset:offset + n].max():.2e}")
    offset += n
