"""Count-based n-gram model with interpolated add-delta backoff.

P_0 is uniform over the vocabulary; for context length k >= 1 with c seen
occurrences of the context,

    P_k(t | ctx) = (count(ctx, t) + delta * P_{k-1}(t | ctx[1:])) / (c + delta)

and P_k backs off to P_{k-1} outright when the context was never seen.
With delta -> 0 this reproduces empirical conditional frequencies exactly.
"""

from __future__ import annotations

from collections import Counter
from typing import Sequence

import numpy as np

from ..errors import InputError
from ..vocab import BOS, PAD
from .base import ModelInterface


class NGramModel(ModelInterface):
    def __init__(self, vocab_size: int, order: int = 4, delta: float = 0.1,
                 context_limit: int = 4096):
        if order < 1:
            raise InputError("order must be >= 1")
        if delta < 0:
            raise InputError("delta must be >= 0")
        self.vocab_size = vocab_size
        self.order = order
        self.delta = delta
        self.context_limit = context_limit
        # counts[k]: context tuple of length k -> Counter of next tokens
        self.counts: list[dict[tuple[int, ...], Counter]] = [
            {} for _ in range(order)
        ]
        self.totals: list[dict[tuple[int, ...], int]] = [{} for _ in range(order)]

    def fit(self, corpus: Sequence[Sequence[int]]):
        for seq in corpus:
            toks = [t for t in seq if t != PAD]
            for i in range(1, len(toks)):
                tgt = toks[i]
                for k in range(self.order):
                    if i - k < 0:
                        break
                    ctx = tuple(toks[i - k : i])
                    table = self.counts[k].setdefault(ctx, Counter())
                    table[tgt] += 1
                    self.totals[k][ctx] = self.totals[k].get(ctx, 0) + 1
        return self

    def next_dist(self, prefix: Sequence[int]) -> np.ndarray:
        prefix = self.window(prefix)
        dist = np.full(self.vocab_size, 1.0 / self.vocab_size)
        for k in range(self.order):
            if k > len(prefix):
                break
            ctx = tuple(prefix[len(prefix) - k :])
            total = self.totals[k].get(ctx, 0)
            if total == 0:
                continue  # unseen context: keep the lower-order estimate
            vec = np.zeros(self.vocab_size)
            for tok, cnt in self.counts[k][ctx].items():
                vec[tok] = cnt
            dist = (vec + self.delta * dist) / (total + self.delta)
        return dist

    def sequence_nll(self, seq: Sequence[int]) -> float:
        """Mean negative log-likelihood of the next-token predictions."""
        toks = [t for t in seq if t != PAD]
        if len(toks) < 2:
            return 0.0
        total = 0.0
        for i in range(1, len(toks)):
            p = self.next_dist(toks[:i])[toks[i]]
            total += -np.log(max(p, 1e-300))
        return total / (len(toks) - 1)
