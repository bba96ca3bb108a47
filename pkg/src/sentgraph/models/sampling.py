"""Autoregressive sampling with optional grammar constraints.

At every step: take the model's next-token distribution, zero out
grammar-illegal tokens (constrained mode), apply temperature, keep the
top-k, renormalize, sample. Constrained output always parses; the
constraint-free mode exists for the ablation and can emit garbage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import grammar
from ..errors import InputError
from ..vocab import BOS, EOS, Vocab
from .base import ModelInterface


@dataclass
class SampleResult:
    tokens: list[int]
    truncated: bool
    constrained: bool
    steps: int

    @property
    def ended(self) -> bool:
        return not self.truncated


def _restrict_top_k(probs: np.ndarray, k: int) -> np.ndarray:
    if k >= np.count_nonzero(probs):
        return probs
    order = np.argsort(-probs, kind="stable")
    out = np.zeros_like(probs)
    keep = order[:k]
    out[keep] = probs[keep]
    return out


def sample_tokens(
    model: ModelInterface,
    vocab: Vocab,
    rng: np.random.Generator,
    k: int = 10,
    temperature: float = 1.0,
    max_len: int = 2048,
    constrained: bool = True,
    attributed: bool = False,
    prefix_tokens: list[int] | None = None,
    mode: str = "sent",
) -> SampleResult:
    """Sample one token sequence, starting from BOS (plus an optional
    conditioning prefix that is replayed through the automaton first)."""
    if k < 1:
        raise InputError("top-k must be >= 1")
    if temperature <= 0:
        raise InputError("temperature must be positive")
    if mode not in ("sent", "set"):
        raise InputError(f"unknown sampling mode {mode}")

    if mode == "sent":
        st = grammar.initial_state(attributed)
        legal_fn = grammar.legal_next
        step_fn = grammar.step
    else:
        st = grammar.set_initial_state()
        legal_fn = grammar.set_legal_next
        step_fn = grammar.set_step

    tokens = [BOS]
    st = step_fn(st, BOS, vocab)
    if prefix_tokens:
        for tok in prefix_tokens:
            st = step_fn(st, int(tok), vocab)  # raises with rule code on bad prefix
            tokens.append(int(tok))

    steps = 0
    while len(tokens) < max_len:
        probs = np.asarray(model.next_dist(tokens), dtype=np.float64).copy()
        if probs.shape[0] != vocab.size:
            raise InputError(
                f"model vocab {probs.shape[0]} does not match token vocab {vocab.size}"
            )
        if constrained:
            legal = legal_fn(st, vocab)
            mask = np.zeros(vocab.size, dtype=bool)
            mask[sorted(legal)] = True
            probs[~mask] = 0.0
            if probs.sum() <= 0:
                probs[mask] = 1.0  # model starved every legal token: fall back flat
        if temperature != 1.0:
            nz = probs > 0
            probs[nz] = np.exp(np.log(probs[nz]) / temperature)
        probs = _restrict_top_k(probs, k)
        total = probs.sum()
        if total <= 0:
            raise InputError("no token has positive probability")
        probs /= total
        tok = int(rng.choice(vocab.size, p=probs))
        tokens.append(tok)
        steps += 1
        if constrained:
            st = step_fn(st, tok, vocab)
            if st.done:
                return SampleResult(tokens, False, True, steps)
        elif tok == EOS:
            return SampleResult(tokens, False, False, steps)
    return SampleResult(tokens, True, constrained, steps)
