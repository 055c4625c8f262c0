"""Curiosity-Critic intrinsic rewards on a noisy-TV grid world."""

__version__ = "0.1.0"
