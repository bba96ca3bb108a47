"""Training loop: AdamW with warmup/cosine schedule and gradient clipping.

Dispatches on model type: the n-gram "trains" by a single counting pass,
the transformer by stochastic gradient steps. Loss curves record
(step, train_nll, val_nll) rows and serialize to CSV.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..errors import InputError, SentGraphError
from ..vocab import PAD
from .base import ModelInterface, TrainConfig
from .ngram import NGramModel
from .transformer import TinyTransformer

Corpus = Sequence[Sequence[int]]


@dataclass
class TrainResult:
    model: ModelInterface
    curve: list[tuple[int, float, float]] = field(default_factory=list)

    def write_curve(self, path: str | Path):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "train_nll", "val_nll"])
            for row in self.curve:
                w.writerow([row[0], f"{row[1]:.6f}", "" if np.isnan(row[2]) else f"{row[2]:.6f}"])


def _make_batch(corpus: Corpus, idx: np.ndarray, context: int):
    seqs = [list(corpus[i])[: context + 1] for i in idx]
    width = max(len(s) for s in seqs)
    inputs = np.full((len(seqs), width - 1), PAD, dtype=np.int64)
    targets = np.full((len(seqs), width - 1), PAD, dtype=np.int64)
    mask = np.zeros((len(seqs), width - 1))
    for r, s in enumerate(seqs):
        L = len(s)
        inputs[r, : L - 1] = s[:-1]
        targets[r, : L - 1] = s[1:]
        mask[r, : L - 1] = [1.0 if t != PAD else 0.0 for t in s[1:]]
    return inputs, targets, mask


def evaluate_nll(model: ModelInterface, corpus: Corpus, batch_size: int = 64) -> float:
    """Mean token-level NLL over a corpus (PAD excluded, BOS never predicted)."""
    if not corpus:
        raise InputError("evaluate_nll needs a nonempty corpus")
    if isinstance(model, TinyTransformer):
        total, count = 0.0, 0.0
        for lo in range(0, len(corpus), batch_size):
            chunk = corpus[lo : lo + batch_size]
            inputs, targets, mask = _make_batch(chunk, np.arange(len(chunk)), model.context_limit)
            loss, _ = model.loss_and_grads(inputs, targets, mask)
            total += loss * mask.sum()
            count += mask.sum()
        return total / max(count, 1.0)
    if isinstance(model, NGramModel):
        total, count = 0.0, 0
        for seq in corpus:
            toks = [t for t in seq if t != PAD]
            total += model.sequence_nll(toks) * max(len(toks) - 1, 0)
            count += max(len(toks) - 1, 0)
        return total / max(count, 1)
    # generic path for any next_dist model
    total, count = 0.0, 0
    for seq in corpus:
        toks = [t for t in seq if t != PAD]
        for i in range(1, len(toks)):
            p = model.next_dist(toks[:i])[toks[i]]
            total += -np.log(max(float(p), 1e-300))
            count += 1
    return total / max(count, 1)


class AdamW:
    def __init__(self, params: dict[str, np.ndarray], cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float):
        cfg = self.cfg
        self.t += 1
        b1, b2 = cfg.beta1, cfg.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for k, p in params.items():
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            mhat = self.m[k] / bias1
            vhat = self.v[k] / bias2
            update = mhat / (np.sqrt(vhat) + cfg.eps)
            if cfg.weight_decay > 0 and p.ndim >= 2:
                update = update + cfg.weight_decay * p
            p -= (lr * update).astype(p.dtype)


def clip_grads(grads: dict[str, np.ndarray], max_norm: float) -> float:
    total = float(np.sqrt(sum(float((g.astype(np.float64) * g.astype(np.float64)).sum()) for g in grads.values())))
    if total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads.values():
            g *= scale
    return total


def train(
    model: ModelInterface,
    corpus: Corpus,
    cfg: TrainConfig,
    val_corpus: Corpus | None = None,
    corpus_provider: Callable[[int], Corpus] | None = None,
) -> TrainResult:
    """Fit a model on a token corpus.

    corpus_provider, when given, re-materializes the training corpus per
    "epoch" (one pass worth of steps), supporting on-the-fly re-encoding of
    the underlying graphs instead of a fixed corpus.
    """
    if not corpus and corpus_provider is None:
        raise InputError("train needs a nonempty corpus")
    if isinstance(model, NGramModel):
        model.fit(corpus)
        train_nll = evaluate_nll(model, corpus)
        val_nll = evaluate_nll(model, val_corpus) if val_corpus else float("nan")
        return TrainResult(model, [(0, train_nll, val_nll)])
    if not isinstance(model, TinyTransformer):
        raise InputError(f"cannot train model type {type(model).__name__}")

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, 11])))
    optimizer = AdamW(model.params, cfg)
    curve: list[tuple[int, float, float]] = []
    active = list(corpus) if corpus else list(corpus_provider(0))
    steps_per_epoch = max(1, len(active) // cfg.batch_size)
    for step in range(cfg.steps):
        if corpus_provider is not None and step > 0 and step % steps_per_epoch == 0:
            active = list(corpus_provider(step // steps_per_epoch))
        idx = rng.integers(0, len(active), size=cfg.batch_size)
        inputs, targets, mask = _make_batch(active, idx, model.context_limit)
        loss, grads = model.loss_and_grads(inputs, targets, mask, dropout=cfg.dropout, rng=rng)
        if not np.isfinite(loss):
            raise SentGraphError(
                f"NaN/inf loss at step {step}: learning rate {cfg.lr_at(step):.2e} too high?"
            )
        clip_grads(grads, cfg.grad_clip)
        optimizer.step(model.params, grads, cfg.lr_at(step))
        if step % cfg.eval_every == 0 or step == cfg.steps - 1:
            val = evaluate_nll(model, val_corpus) if val_corpus else float("nan")
            curve.append((step, loss, val))
    return TrainResult(model, curve)
