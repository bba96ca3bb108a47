"""Versioned binary model checkpoints.

Layout: magic 'SGCK', u32 version, u32 header length, JSON header (model
type, dims, vocab params, seed, tensor directory), then each tensor as
little-endian float32 in declaration order, then a trailing CRC32 of
everything before it.
"""

from __future__ import annotations

import json
import struct
import zlib
from collections import Counter
from pathlib import Path

import numpy as np

from ..errors import InputError
from ..vocab import Vocab
from .base import ModelInterface
from .ngram import NGramModel
from .transformer import TinyTransformer, TransformerConfig

MAGIC = b"SGCK"
VERSION = 1


def _ngram_tensors(model: NGramModel) -> dict[str, np.ndarray]:
    tensors: dict[str, np.ndarray] = {}
    for k in range(model.order):
        rows = []
        for ctx in sorted(model.counts[k]):
            for tok in sorted(model.counts[k][ctx]):
                rows.append(list(ctx) + [tok, model.counts[k][ctx][tok]])
        arr = np.asarray(rows, dtype=np.float32) if rows else np.zeros((0, k + 2), np.float32)
        tensors[f"counts.{k}"] = arr.reshape(-1, k + 2)
    return tensors


def save_model(
    path: str | Path,
    model: ModelInterface,
    vocab: Vocab | None = None,
    seed: int | None = None,
    extra: dict | None = None,
):
    if isinstance(model, TinyTransformer):
        model_type = "transformer"
        cfg = model.config
        config = {
            "vocab_size": cfg.vocab_size,
            "layers": cfg.layers,
            "heads": cfg.heads,
            "width": cfg.width,
            "context": cfg.context,
            "mlp_ratio": cfg.mlp_ratio,
        }
        tensors = model.params
    elif isinstance(model, NGramModel):
        model_type = "ngram"
        config = {
            "vocab_size": model.vocab_size,
            "order": model.order,
            "delta": model.delta,
            "context_limit": model.context_limit,
        }
        tensors = _ngram_tensors(model)
    else:
        raise InputError(f"cannot checkpoint model type {type(model).__name__}")

    header = {
        "model_type": model_type,
        "config": config,
        "vocab": None
        if vocab is None
        else {
            "max_nodes": vocab.max_nodes,
            "node_label_count": vocab.node_label_count,
            "edge_label_count": vocab.edge_label_count,
        },
        "seed": seed,
        "extra": extra or {},
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in tensors.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    out = bytearray()
    out += MAGIC
    out += struct.pack("<II", VERSION, len(blob))
    out += blob
    for v in tensors.values():
        out += np.ascontiguousarray(v, dtype="<f4").tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(out))


def load_model(path: str | Path) -> tuple[ModelInterface, dict]:
    """Load a checkpoint; returns (model, header)."""
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise InputError(f"{path} is not a sentgraph checkpoint")
    (crc,) = struct.unpack("<I", raw[-4:])
    if crc != (zlib.crc32(raw[:-4]) & 0xFFFFFFFF):
        raise InputError(f"{path}: checksum mismatch, file corrupted")
    version, hlen = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise InputError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(raw[12 : 12 + hlen].decode())
    cursor = 12 + hlen
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=cursor).reshape(shape)
        tensors[entry["name"]] = arr.copy()
        cursor += 4 * count

    cfg = header["config"]
    if header["model_type"] == "transformer":
        model = TinyTransformer(TransformerConfig(**cfg))
        for name in model.params:
            if name not in tensors:
                raise InputError(f"{path}: missing tensor {name}")
            model.params[name] = tensors[name].astype(model.config.np_dtype)
    elif header["model_type"] == "ngram":
        model = NGramModel(
            vocab_size=cfg["vocab_size"],
            order=cfg["order"],
            delta=cfg["delta"],
            context_limit=cfg["context_limit"],
        )
        for k in range(model.order):
            arr = tensors.get(f"counts.{k}")
            if arr is None:
                continue
            for row in arr:
                ctx = tuple(int(x) for x in row[:k])
                tok = int(row[k])
                cnt = int(row[k + 1])
                table = model.counts[k].setdefault(ctx, Counter())
                table[tok] = cnt
                model.totals[k][ctx] = model.totals[k].get(ctx, 0) + cnt
    else:
        raise InputError(f"{path}: unknown model type {header['model_type']}")
    return model, header
