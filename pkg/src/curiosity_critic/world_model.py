"""Online observation predictor: cell encoding -> 200-bit observation."""

from __future__ import annotations

import numpy as np

from curiosity_critic import tensor_nn as nn
from curiosity_critic.env import OBS_DIM, STATE_DIM, encode_state

HIDDEN = 1024


class WorldModel:
    """60 -> 1024 (ReLU) -> 200 MLP trained with MSE, one Adam step per call.

    Training minimizes the mean squared error, but :meth:`error` (the quantity
    rewards and evaluation use) is the unsquared L2 norm of the residual.
    """

    def __init__(self, rng: np.random.Generator, lr: float = 1e-3):
        self.net = nn.net_new([STATE_DIM, HIDDEN, OBS_DIM], [nn.RELU, nn.IDENTITY], rng)
        self.adam = nn.adam_new(self.net, lr=lr)

    def predict(self, cell) -> np.ndarray:
        return nn.net_forward(self.net, encode_state(cell))

    def error(self, cell, obs) -> float:
        return float(np.linalg.norm(self.predict(cell) - obs))

    def update(self, cell, obs) -> tuple[float, float]:
        """Train on ``(cell, obs)``; return the L2 error before and after."""
        x = encode_state(cell)
        loss = nn.net_train_step(self.net, self.adam, x, obs)
        # MSE is a mean over OBS_DIM, so the pre-update L2 error falls out of it.
        e_before = float(np.sqrt(loss * OBS_DIM))
        e_after = float(np.linalg.norm(nn.net_forward(self.net, x) - obs))
        return e_before, e_after

    def eval_errors(self, inputs: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Per-row L2 errors for a stacked batch of encodings and targets."""
        return np.linalg.norm(nn.net_forward(self.net, inputs) - targets, axis=1)


def wm_eval_deterministic(wm: WorldModel, env) -> float:
    """Mean L2 error over every deterministic cell against its fixed pattern.

    Reads patterns directly, so the environment's noise stream is untouched.
    """
    cells = env.eval_cells()
    if not cells:
        return float("nan")
    inputs = np.stack([encode_state(c) for c in cells])
    return float(wm.eval_errors(inputs, env.eval_targets()).mean())
