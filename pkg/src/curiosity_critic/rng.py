"""Named, independent random streams derived from one run seed."""

import numpy as np

STREAMS = (
    "env_patterns",
    "env_noise",
    "wm_init",
    "critic_init",
    "rnd_target",
    "rnd_predictor",
    "policy",
    "warmup",
)


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for stream ``name`` of ``seed``.

    Streams are keyed by their fixed index in ``STREAMS`` so adding a consumer
    never shifts the draws another consumer sees.
    """
    key = STREAMS.index(name)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))
