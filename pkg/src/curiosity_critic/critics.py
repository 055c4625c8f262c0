"""Estimators of the error a fully trained world model would still make.

Every estimator is fed the post-update error of each visited cell and returns
a non-negative baseline that the curiosity reward subtracts from the raw
error. ``ZeroBaseline`` and ``PostUpdateBaseline`` are the degenerate choices
that turn the reward back into plain prediction error and one-step learning
progress respectively.
"""

from __future__ import annotations

import numpy as np

from curiosity_critic import tensor_nn as nn
from curiosity_critic.env import (
    GRID,
    NOISE_FLOOR,
    STATE_DIM,
    ContractError,
    encode_state,
    is_stochastic,
)

CRITIC_HIDDEN = 128


def _check_target(e_after: float) -> None:
    if not e_after >= 0.0:
        raise ContractError(f"post-update error must be >= 0, got {e_after}")


class BaselineEstimator:
    name = "base"

    def observe(self, cell, e_after: float) -> None:
        _check_target(e_after)

    def estimate(self, cell, e_after_current: float | None = None) -> float:
        raise NotImplementedError

    def estimate_many(self, cells) -> np.ndarray:
        return np.array([self.estimate(c) for c in cells])


class NeuralCritic(BaselineEstimator):
    """60 -> 128 (ReLU) -> 1 regressor of the post-update error.

    The output is clamped at zero only when read; training sees the raw output
    so a negative prediction still gets a gradient back up.
    """

    name = "neural"

    def __init__(self, rng: np.random.Generator, lr: float = 1e-3):
        self.net = nn.net_new([STATE_DIM, CRITIC_HIDDEN, 1], [nn.RELU, nn.IDENTITY], rng)
        self.adam = nn.adam_new(self.net, lr=lr)

    def observe(self, cell, e_after):
        _check_target(e_after)
        nn.net_train_step(self.net, self.adam, encode_state(cell), np.array([e_after]))

    def estimate(self, cell, e_after_current=None):
        return max(0.0, float(nn.net_forward(self.net, encode_state(cell))[0]))

    def estimate_many(self, cells):
        x = np.stack([encode_state(c) for c in cells])
        return np.maximum(nn.net_forward(self.net, x)[:, 0], 0.0)


class TabularCritic(BaselineEstimator):
    """Per-cell EMA of the post-update error.

    The first observation of a cell sets its value outright; unvisited cells
    estimate 0.
    """

    name = "tabular"

    def __init__(self, decay: float = 0.9):
        if not 0.0 < decay < 1.0:
            raise ValueError(f"decay must lie in (0, 1), got {decay}")
        self.decay = decay
        self.table = np.zeros((GRID, GRID))
        self.seen = np.zeros((GRID, GRID), dtype=bool)

    def observe(self, cell, e_after):
        _check_target(e_after)
        r, c = cell
        if self.seen[r, c]:
            self.table[r, c] = self.decay * self.table[r, c] + (1.0 - self.decay) * e_after
        else:
            self.table[r, c] = e_after
            self.seen[r, c] = True

    def estimate(self, cell, e_after_current=None):
        return float(self.table[cell[0], cell[1]])


class OracleCritic(BaselineEstimator):
    """Knows the analytic noise floor of every cell."""

    name = "oracle"

    def __init__(self, floor_stochastic: float = NOISE_FLOOR, floor_deterministic: float = 0.0):
        self.floor_stochastic = floor_stochastic
        self.floor_deterministic = floor_deterministic

    def estimate(self, cell, e_after_current=None):
        return self.floor_stochastic if is_stochastic(cell) else self.floor_deterministic


class ZeroBaseline(BaselineEstimator):
    name = "zero"

    def estimate(self, cell, e_after_current=None):
        return 0.0


class PostUpdateBaseline(BaselineEstimator):
    """Uses the current step's post-update error as the baseline."""

    name = "post_update"

    def __init__(self):
        self.last_e_after = 0.0

    def observe(self, cell, e_after):
        _check_target(e_after)
        self.last_e_after = e_after

    def estimate(self, cell, e_after_current=None):
        if e_after_current is None:
            return self.last_e_after
        return e_after_current
