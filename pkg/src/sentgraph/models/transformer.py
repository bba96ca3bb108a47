"""Decoder-only transformer in plain numpy with hand-written backprop.

Pre-norm blocks, learned positional embeddings, strictly causal attention,
GELU MLP. Gradients are exact analytic derivatives; train in float32, run
gradient checks in float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InputError
from .base import ModelInterface

_GELU_C = np.sqrt(2.0 / np.pi)


@dataclass
class TransformerConfig:
    vocab_size: int
    layers: int = 2
    heads: int = 4
    width: int = 128
    context: int = 512
    mlp_ratio: int = 4
    dtype: str = "float32"

    def __post_init__(self):
        if self.width % self.heads != 0:
            raise InputError("width must be divisible by heads")
        if min(self.vocab_size, self.layers, self.heads, self.width, self.context) < 1:
            raise InputError("all transformer dimensions must be positive")

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32


def _gelu(x):
    # np.power is pathologically slow on this numpy build: spell out cubes
    u = _GELU_C * (x + 0.044715 * (x * x * x))
    t = np.tanh(u)
    return 0.5 * x * (1.0 + t), t


def _gelu_grad(x, t):
    du = _GELU_C * (1.0 + 0.134145 * (x * x))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du


def _softmax_last(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class TinyTransformer(ModelInterface):
    LN_EPS = 1e-5

    def __init__(self, config: TransformerConfig, seed: int = 0):
        self.config = config
        self.vocab_size = config.vocab_size
        self.context_limit = config.context
        self.params = self._init_params(seed)

    # --- parameters ---

    def _init_params(self, seed: int) -> dict[str, np.ndarray]:
        cfg = self.config
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 7])))
        dt = cfg.np_dtype
        d, h = cfg.width, cfg.mlp_ratio * cfg.width

        def normal(*shape, scale=0.02):
            return (rng.normal(0.0, scale, size=shape)).astype(dt)

        resid_scale = 0.02 / np.sqrt(2 * cfg.layers)
        p: dict[str, np.ndarray] = {}
        p["wte"] = normal(cfg.vocab_size, d)
        p["wpe"] = normal(cfg.context, d)
        for i in range(cfg.layers):
            pre = f"l{i}."
            p[pre + "ln1.g"] = np.ones(d, dtype=dt)
            p[pre + "ln1.b"] = np.zeros(d, dtype=dt)
            p[pre + "attn.wq"] = normal(d, d)
            p[pre + "attn.bq"] = np.zeros(d, dtype=dt)
            p[pre + "attn.wk"] = normal(d, d)
            p[pre + "attn.bk"] = np.zeros(d, dtype=dt)
            p[pre + "attn.wv"] = normal(d, d)
            p[pre + "attn.bv"] = np.zeros(d, dtype=dt)
            p[pre + "attn.wo"] = normal(d, d, scale=resid_scale)
            p[pre + "attn.bo"] = np.zeros(d, dtype=dt)
            p[pre + "ln2.g"] = np.ones(d, dtype=dt)
            p[pre + "ln2.b"] = np.zeros(d, dtype=dt)
            p[pre + "mlp.w1"] = normal(d, h)
            p[pre + "mlp.b1"] = np.zeros(h, dtype=dt)
            p[pre + "mlp.w2"] = normal(h, d, scale=resid_scale)
            p[pre + "mlp.b2"] = np.zeros(d, dtype=dt)
        p["lnf.g"] = np.ones(d, dtype=dt)
        p["lnf.b"] = np.zeros(d, dtype=dt)
        p["head.w"] = normal(d, cfg.vocab_size)
        return p

    # --- layers ---

    def _ln_forward(self, x, g, b):
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.LN_EPS)
        xhat = xc * inv
        return xhat * g + b, (xhat, inv, g)

    @staticmethod
    def _ln_backward(dy, cache):
        xhat, inv, g = cache
        dgh = dy * g
        dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
        db = dy.sum(axis=tuple(range(dy.ndim - 1)))
        mean1 = dgh.mean(axis=-1, keepdims=True)
        mean2 = (dgh * xhat).mean(axis=-1, keepdims=True)
        dx = inv * (dgh - mean1 - xhat * mean2)
        return dx, dg, db

    def _dropout(self, x, p, rng):
        if p <= 0 or rng is None:
            return x, None
        keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
        return x * keep, keep

    def forward(self, tokens: np.ndarray, dropout: float = 0.0, rng=None):
        """Logits (B, T, V) plus the cache needed for backward."""
        cfg = self.config
        p = self.params
        B, T = tokens.shape
        if T > cfg.context:
            raise InputError(f"sequence length {T} exceeds context {cfg.context}")
        nh, hd = cfg.heads, cfg.width // cfg.heads
        scale = 1.0 / np.sqrt(hd)
        causal = np.triu(np.full((T, T), -np.inf), k=1)

        x = p["wte"][tokens] + p["wpe"][:T]
        x, emb_keep = self._dropout(x, dropout, rng)
        cache: dict = {"tokens": tokens, "emb_keep": emb_keep, "layers": []}
        for i in range(cfg.layers):
            pre = f"l{i}."
            lc: dict = {}
            a, lc["ln1"] = self._ln_forward(x, p[pre + "ln1.g"], p[pre + "ln1.b"])
            lc["a"] = a
            q = a @ p[pre + "attn.wq"] + p[pre + "attn.bq"]
            k = a @ p[pre + "attn.wk"] + p[pre + "attn.bk"]
            v = a @ p[pre + "attn.wv"] + p[pre + "attn.bv"]
            qh = q.reshape(B, T, nh, hd).transpose(0, 2, 1, 3)
            kh = k.reshape(B, T, nh, hd).transpose(0, 2, 1, 3)
            vh = v.reshape(B, T, nh, hd).transpose(0, 2, 1, 3)
            scores = qh @ kh.transpose(0, 1, 3, 2) * scale + causal
            att = _softmax_last(scores)
            ctx = att @ vh
            lc.update(qh=qh, kh=kh, vh=vh, att=att, scale=scale)
            merged = ctx.transpose(0, 2, 1, 3).reshape(B, T, cfg.width)
            lc["merged"] = merged
            attn_out = merged @ p[pre + "attn.wo"] + p[pre + "attn.bo"]
            attn_out, lc["attn_keep"] = self._dropout(attn_out, dropout, rng)
            x1 = x + attn_out
            b_, lc["ln2"] = self._ln_forward(x1, p[pre + "ln2.g"], p[pre + "ln2.b"])
            lc["b_"] = b_
            z = b_ @ p[pre + "mlp.w1"] + p[pre + "mlp.b1"]
            m, tanh_u = _gelu(z)
            lc["z"] = z
            lc["m"] = m
            lc["tanh_u"] = tanh_u
            mlp_out = m @ p[pre + "mlp.w2"] + p[pre + "mlp.b2"]
            mlp_out, lc["mlp_keep"] = self._dropout(mlp_out, dropout, rng)
            x = x1 + mlp_out
            lc["x1"] = x1
            cache["layers"].append(lc)
        f, cache["lnf"] = self._ln_forward(x, p["lnf.g"], p["lnf.b"])
        cache["f"] = f
        logits = f @ p["head.w"]
        return logits, cache

    def loss_and_grads(
        self,
        inputs: np.ndarray,
        targets: np.ndarray,
        mask: np.ndarray,
        dropout: float = 0.0,
        rng=None,
    ):
        """Mean masked NLL and exact gradients for every parameter."""
        cfg = self.config
        p = self.params
        logits, cache = self.forward(inputs, dropout, rng)
        B, T, V = logits.shape
        probs = _softmax_last(logits)
        denom = max(mask.sum(), 1.0)
        rows = np.arange(B)[:, None], np.arange(T)[None, :]
        logp = np.log(np.maximum(probs[rows[0], rows[1], targets], 1e-300))
        loss = float(-(logp * mask).sum() / denom)

        dlogits = probs.copy()
        dlogits[rows[0], rows[1], targets] -= 1.0
        dlogits *= (mask / denom)[..., None]
        dlogits = dlogits.astype(p["head.w"].dtype)

        def gemm_td(x, y):
            # (B,T,D),(B,T,E) -> (D,E) contraction over batch and time
            d, e = x.shape[-1], y.shape[-1]
            return x.reshape(-1, d).T @ y.reshape(-1, e)

        grads: dict[str, np.ndarray] = {k: np.zeros_like(v) for k, v in p.items()}
        f = cache["f"]
        grads["head.w"] += gemm_td(f, dlogits)
        df = dlogits @ p["head.w"].T
        dx, dg, db = self._ln_backward(df, cache["lnf"])
        grads["lnf.g"] += dg
        grads["lnf.b"] += db

        nh, hd = cfg.heads, cfg.width // cfg.heads
        for i in reversed(range(cfg.layers)):
            pre = f"l{i}."
            lc = cache["layers"][i]
            # mlp branch
            dmlp_out = dx
            if lc["mlp_keep"] is not None:
                dmlp_out = dmlp_out * lc["mlp_keep"]
            grads[pre + "mlp.w2"] += gemm_td(lc["m"], dmlp_out)
            grads[pre + "mlp.b2"] += dmlp_out.sum(axis=(0, 1))
            dm = dmlp_out @ p[pre + "mlp.w2"].T
            dz = dm * _gelu_grad(lc["z"], lc["tanh_u"])
            grads[pre + "mlp.w1"] += gemm_td(lc["b_"], dz)
            grads[pre + "mlp.b1"] += dz.sum(axis=(0, 1))
            db_ = dz @ p[pre + "mlp.w1"].T
            dx1_from_ln2, dg, db = self._ln_backward(db_, lc["ln2"])
            grads[pre + "ln2.g"] += dg
            grads[pre + "ln2.b"] += db
            dx1 = dx + dx1_from_ln2
            # attention branch
            dattn_out = dx1
            if lc["attn_keep"] is not None:
                dattn_out = dattn_out * lc["attn_keep"]
            grads[pre + "attn.wo"] += gemm_td(lc["merged"], dattn_out)
            grads[pre + "attn.bo"] += dattn_out.sum(axis=(0, 1))
            dmerged = dattn_out @ p[pre + "attn.wo"].T
            B_, T_ = dmerged.shape[:2]
            dctx = dmerged.reshape(B_, T_, nh, hd).transpose(0, 2, 1, 3)
            datt = dctx @ lc["vh"].transpose(0, 1, 3, 2)
            dvh = lc["att"].transpose(0, 1, 3, 2) @ dctx
            att = lc["att"]
            dscores = att * (datt - (datt * att).sum(axis=-1, keepdims=True))
            dqh = dscores @ lc["kh"] * lc["scale"]
            dkh = dscores.transpose(0, 1, 3, 2) @ lc["qh"] * lc["scale"]
            dq = dqh.transpose(0, 2, 1, 3).reshape(B_, T_, cfg.width)
            dk = dkh.transpose(0, 2, 1, 3).reshape(B_, T_, cfg.width)
            dv = dvh.transpose(0, 2, 1, 3).reshape(B_, T_, cfg.width)
            a = lc["a"]
            grads[pre + "attn.wq"] += gemm_td(a, dq)
            grads[pre + "attn.bq"] += dq.sum(axis=(0, 1))
            grads[pre + "attn.wk"] += gemm_td(a, dk)
            grads[pre + "attn.bk"] += dk.sum(axis=(0, 1))
            grads[pre + "attn.wv"] += gemm_td(a, dv)
            grads[pre + "attn.bv"] += dv.sum(axis=(0, 1))
            da = (
                dq @ p[pre + "attn.wq"].T
                + dk @ p[pre + "attn.wk"].T
                + dv @ p[pre + "attn.wv"].T
            )
            dx_from_ln1, dg, db = self._ln_backward(da, lc["ln1"])
            grads[pre + "ln1.g"] += dg
            grads[pre + "ln1.b"] += db
            dx = dx1 + dx_from_ln1

        if cache["emb_keep"] is not None:
            dx = dx * cache["emb_keep"]
        tokens = cache["tokens"]
        np.add.at(grads["wte"], tokens, dx)
        grads["wpe"][: tokens.shape[1]] += dx.sum(axis=0)
        return loss, grads

    # --- inference ---

    def next_dist(self, prefix: Sequence[int]) -> np.ndarray:
        prefix = self.window(prefix)
        if not prefix:
            raise InputError("next_dist needs a nonempty prefix")
        toks = np.asarray([prefix], dtype=np.int64)
        logits, _ = self.forward(toks)
        return _softmax_last(logits[0, -1].astype(np.float64))

    def next_logits(self, prefix: Sequence[int]) -> np.ndarray:
        prefix = self.window(prefix)
        toks = np.asarray([prefix], dtype=np.int64)
        logits, _ = self.forward(toks)
        return logits[0, -1].astype(np.float64)
