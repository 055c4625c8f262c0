"""Per-step intrinsic reward strategies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from curiosity_critic import tensor_nn as nn
from curiosity_critic.critics import BaselineEstimator
from curiosity_critic.env import OBS_DIM, STATE_DIM, encode_state

RND_HIDDEN = 128
RND_OUT = 128


@dataclass
class StepContext:
    cell: tuple
    obs: np.ndarray
    e_before: float
    e_after: float
    visit_count: int


class RndPair:
    """Frozen random target and a predictor trained to imitate it.

    ``input_mode`` is ``"state"`` (60-d cell encoding) or ``"obs"`` (the
    emitted 200-bit observation).
    """

    def __init__(self, input_mode: str, target_rng, predictor_rng, lr: float = 1e-3):
        if input_mode not in ("state", "obs"):
            raise ValueError(f"unknown RND input mode {input_mode!r}")
        self.input_mode = input_mode
        n_in = STATE_DIM if input_mode == "state" else OBS_DIM
        shape = [n_in, RND_HIDDEN, RND_OUT]
        acts = [nn.RELU, nn.IDENTITY]
        self.target = nn.net_new(shape, acts, target_rng)
        self.predictor = nn.net_new(shape, acts, predictor_rng)
        self.adam = nn.adam_new(self.predictor, lr=lr)

    def input_for(self, cell, obs) -> np.ndarray:
        return encode_state(cell) if self.input_mode == "state" else np.asarray(obs, dtype=np.float64)

    def reward(self, cell, obs) -> float:
        """Pre-update predictor MSE on this input, then one training step on it."""
        x = self.input_for(cell, obs)
        goal = nn.net_forward(self.target, x)
        return nn.net_train_step(self.predictor, self.adam, x, goal)


def rnd_reward(pair: RndPair, cell, obs) -> float:
    return pair.reward(cell, obs)


class RewardMethod:
    name = "base"
    # Methods without a learning signal skip normalization and V-table updates.
    drives_policy = True
    estimator: BaselineEstimator | None = None

    def compute(self, ctx: StepContext) -> float:
        raise NotImplementedError


class RandomReward(RewardMethod):
    name = "random"
    drives_policy = False

    def compute(self, ctx):
        return 0.0


class CuriosityV1(RewardMethod):
    name = "v1"

    def compute(self, ctx):
        return ctx.e_before


class CuriosityV2(RewardMethod):
    name = "v2"

    def compute(self, ctx):
        return ctx.e_before - ctx.e_after


class CuriosityCritic(RewardMethod):
    """Raw error minus a learned (or given) asymptotic baseline.

    The estimator must already have seen this step's post-update error.
    """

    def __init__(self, estimator: BaselineEstimator, name: str | None = None):
        self.estimator = estimator
        self.name = name or f"cc-{estimator.name}"

    def compute(self, ctx):
        return ctx.e_before - self.estimator.estimate(ctx.cell, ctx.e_after)


class RndReward(RewardMethod):
    def __init__(self, pair: RndPair, name: str | None = None):
        self.pair = pair
        self.name = name or f"rnd-{pair.input_mode}"

    def compute(self, ctx):
        return self.pair.reward(ctx.cell, ctx.obs)


class VisitCount(RewardMethod):
    name = "visit-count"

    def compute(self, ctx):
        return 1.0 / np.sqrt(ctx.visit_count)


def compute_reward(method: RewardMethod, ctx: StepContext) -> float:
    return method.compute(ctx)
