"""30x30 noisy-TV grid world.

Columns 0-14 are deterministic: each cell always emits the same 200-bit
pattern, a cyclic shift of one random base vector. Columns 15-29 form the
"TV": every visit emits fresh Bernoulli(0.5) bits. Moves between cells are
deterministic and actions that would leave the grid are not offered.
"""

from __future__ import annotations

from enum import IntEnum
from typing import NamedTuple

import numpy as np

from curiosity_critic.rng import substream

GRID = 30
OBS_DIM = 200
STOCHASTIC_COL = 15
STATE_DIM = 2 * GRID
START = (15, 15)
NOISE_FLOOR = float(np.sqrt(OBS_DIM * 0.25))


class Cell(NamedTuple):
    row: int
    col: int


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


_MOVES = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}


class ContractError(ValueError):
    """An operation was called outside its precondition."""


def is_stochastic(cell) -> bool:
    return cell[1] >= STOCHASTIC_COL


def in_bounds(cell) -> bool:
    return 0 <= cell[0] < GRID and 0 <= cell[1] < GRID


def pattern_shift(cell) -> int:
    """Rotation applied to the base vector at a deterministic cell.

    Horizontal neighbours differ by 1, vertical neighbours by 15.
    """
    return (15 * cell[0] + cell[1]) % OBS_DIM


def deterministic_cells() -> list[Cell]:
    return [Cell(r, c) for r in range(GRID) for c in range(STOCHASTIC_COL)]


def stochastic_cells() -> list[Cell]:
    return [Cell(r, c) for r in range(GRID) for c in range(STOCHASTIC_COL, GRID)]


def encode_state(cell) -> np.ndarray:
    x = np.zeros(STATE_DIM)
    x[cell[0]] = 1.0
    x[GRID + cell[1]] = 1.0
    return x


def valid_actions(cell) -> list[Action]:
    r, c = cell
    return [a for a, (dr, dc) in _MOVES.items() if in_bounds((r + dr, c + dc))]


def step(cell, action) -> Cell:
    dr, dc = _MOVES[Action(action)]
    nxt = Cell(cell[0] + dr, cell[1] + dc)
    if not in_bounds(nxt):
        raise ContractError(f"action {Action(action).name} leaves the grid from {tuple(cell)}")
    return nxt


class NoisyTvEnv:
    """Observation source for the grid.

    The base pattern and the emission noise come from separate substreams of
    ``seed``, so two environments with the same seed agree on patterns and,
    given the same sequence of stochastic visits, on every emitted bit.
    """

    def __init__(self, seed: int, stochastic_cols: int = STOCHASTIC_COL):
        self.seed = seed
        self.stochastic_col = stochastic_cols
        pattern_rng = substream(seed, "env_patterns")
        self.obs_rng = substream(seed, "env_noise")
        self.base_pattern = pattern_rng.integers(0, 2, size=OBS_DIM).astype(np.float64)
        self.det_patterns = {
            cell: np.roll(self.base_pattern, pattern_shift(cell))
            for cell in deterministic_cells()
            if not self.is_stochastic(cell)
        }
        for p in self.det_patterns.values():
            p.flags.writeable = False

    def is_stochastic(self, cell) -> bool:
        return cell[1] >= self.stochastic_col

    def observe(self, cell) -> np.ndarray:
        if not in_bounds(cell):
            raise ContractError(f"cell {tuple(cell)} is outside the grid")
        if self.is_stochastic(cell):
            return self.obs_rng.integers(0, 2, size=OBS_DIM).astype(np.float64)
        return self.det_patterns[Cell(*cell)]

    def deterministic_pattern(self, cell) -> np.ndarray:
        if self.is_stochastic(cell) or not in_bounds(cell):
            raise ContractError(f"cell {tuple(cell)} has no fixed pattern")
        return self.det_patterns[Cell(*cell)]

    def eval_cells(self) -> list[Cell]:
        return list(self.det_patterns)

    def eval_targets(self) -> np.ndarray:
        """Patterns of :meth:`eval_cells`, stacked row-wise."""
        return np.stack([self.det_patterns[c] for c in self.det_patterns])


def env_new(seed: int) -> NoisyTvEnv:
    return NoisyTvEnv(seed)
