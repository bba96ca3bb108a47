"""Model interface and training configuration."""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import InputError


class ModelInterface(abc.ABC):
    """Next-token model over a fixed vocabulary.

    next_dist must return a valid probability vector (nonnegative, sums to
    one within 1e-9). Prefixes longer than context_limit are windowed to
    their last context_limit tokens.
    """

    vocab_size: int
    context_limit: int

    @abc.abstractmethod
    def next_dist(self, prefix: Sequence[int]) -> np.ndarray:
        ...

    def window(self, prefix: Sequence[int]) -> list[int]:
        prefix = list(prefix)
        if len(prefix) > self.context_limit:
            return prefix[-self.context_limit :]
        return prefix


@dataclass
class TrainConfig:
    """Optimization settings: AdamW, linear warmup then cosine decay."""

    steps: int = 2000
    batch_size: int = 32
    peak_lr: float = 3e-3
    warmup_frac: float = 0.05
    weight_decay: float = 0.1
    grad_clip: float = 1.0
    dropout: float = 0.1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.95
    eps: float = 1e-8
    eval_every: int = 100

    def __post_init__(self):
        if self.steps <= 0 or self.batch_size <= 0 or self.peak_lr <= 0:
            raise InputError("steps, batch_size and peak_lr must be positive")
        if not (0 <= self.warmup_frac < 1):
            raise InputError("warmup_frac must lie in [0, 1)")
        if self.grad_clip <= 0 or self.eps <= 0:
            raise InputError("grad_clip and eps must be positive")
        if not (0 <= self.dropout < 1):
            raise InputError("dropout must lie in [0, 1)")

    @property
    def warmup_steps(self) -> int:
        return int(self.steps * self.warmup_frac)

    def lr_at(self, step: int) -> float:
        """Linear warmup to peak_lr, then cosine decay to zero."""
        warm = max(1, self.warmup_steps)
        if step < warm:
            return self.peak_lr * (step + 1) / warm
        span = max(1, self.steps - warm)
        progress = min(1.0, (step - warm) / span)
        return 0.5 * self.peak_lr * (1.0 + np.cos(np.pi * progress))
