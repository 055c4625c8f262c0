"""Reward normalization, state-value EMA table and epsilon-greedy moves."""

from __future__ import annotations

import math

import numpy as np

from curiosity_critic.env import GRID, step, valid_actions


class RewardNormalizer:
    """Divides rewards by a running EMA estimate of their standard deviation.

    The reward itself is never centred, so its sign survives. With
    ``centered=False`` the spread is the root of the EMA of ``r**2``; with
    ``centered=True`` the spread estimate subtracts a running mean first.
    The first reward seeds the state so that it normalizes to +-1 and the
    output sequence does not depend on the overall reward scale.
    """

    def __init__(self, decay: float = 0.99, floor: float = 1e-8, centered: bool = False):
        if not 0.0 < decay < 1.0:
            raise ValueError("decay must be in (0, 1)")
        self.decay = decay
        self.floor = floor
        self.centered = centered
        self.ema_mean = 0.0
        self.ema_var = 0.0
        self.initialized = False

    @property
    def std(self) -> float:
        return math.sqrt(self.ema_var)

    def normalize(self, r: float) -> float:
        if not self.initialized:
            self.ema_mean = r if self.centered else 0.0
            self.ema_var = r * r
            self.initialized = True
        elif self.centered:
            delta = r - self.ema_mean
            self.ema_mean += (1.0 - self.decay) * delta
            self.ema_var = self.decay * (self.ema_var + (1.0 - self.decay) * delta * delta)
        else:
            self.ema_var = self.decay * self.ema_var + (1.0 - self.decay) * r * r
        return r / max(self.std, self.floor)


class VTable:
    def __init__(self, init: float = 3.0, alpha: float = 0.05, epsilon: float = 0.3):
        self.values = np.full((GRID, GRID), float(init))
        self.alpha = alpha
        self.epsilon = epsilon

    def update(self, cell, r_norm: float) -> None:
        if not math.isfinite(r_norm):
            raise FloatingPointError(f"non-finite normalized reward {r_norm}")
        r, c = cell
        self.values[r, c] += self.alpha * (r_norm - self.values[r, c])

    def select_action(self, cell, rng: np.random.Generator):
        actions = valid_actions(cell)
        if rng.random() < self.epsilon:
            return actions[rng.integers(len(actions))]
        vals = [self.values[step(cell, a)] for a in actions]
        best = max(vals)
        ties = [a for a, v in zip(actions, vals) if v == best]
        if len(ties) == 1:
            return ties[0]
        return ties[rng.integers(len(ties))]


def normalize(norm: RewardNormalizer, r: float) -> float:
    return norm.normalize(r)


def v_update(vt: VTable, cell, r_norm: float) -> None:
    vt.update(cell, r_norm)


def select_action(vt: VTable, cell, rng):
    return vt.select_action(cell, rng)
