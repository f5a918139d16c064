"""Small real-valued neural-network engine (dense, conv2d, recurrent, reshape)."""

from .layers import (ACTIVATIONS, Conv2d, Dense, FeatureMapReshape, Flatten, Recurrent,
                     TimeReverse, activation_derivative, activation_eval, unreshape_feature_maps)
from .network import Sequential
from .optim import OPTIMIZERS, DivergenceError, Optimizer, make_optimizer, optimizer_step
from .train import TrainHistory, initialize, loss_and_gradients, mse_grad, mse_loss, train

__all__ = [
    "ACTIVATIONS", "OPTIMIZERS", "Conv2d", "Dense", "DivergenceError", "FeatureMapReshape",
    "Flatten", "Optimizer", "Recurrent", "Sequential", "TimeReverse", "TrainHistory",
    "activation_derivative", "activation_eval", "initialize", "loss_and_gradients",
    "make_optimizer", "mse_grad", "mse_loss", "optimizer_step", "train",
    "unreshape_feature_maps",
]
