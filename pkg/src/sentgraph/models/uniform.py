"""Uniform next-token model: the untrained baseline used in ablations."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .base import ModelInterface


class UniformModel(ModelInterface):
    def __init__(self, vocab_size: int, context_limit: int = 4096):
        self.vocab_size = vocab_size
        self.context_limit = context_limit

    def next_dist(self, prefix: Sequence[int]) -> np.ndarray:
        return np.full(self.vocab_size, 1.0 / self.vocab_size)
