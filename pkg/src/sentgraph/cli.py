"""Command-line pipeline: gen-data, encode, decode, train, sample, eval,
ablate, calibrate-sbm.

Every flag has a config-file twin: `--config run.ini` reads the section
named after the subcommand, and explicit command-line flags win on
conflict. Each run writes an effective-config snapshot next to its
outputs. Exit codes: 0 ok, 2 input error, 3 contract violation, 4
capacity exceeded.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from . import grammar
from .codec import (
    decode_graph,
    decode_graph_set,
    detokenize_lenient,
    detokenize_set,
    encode_graph,
)
from .datasets import (
    DatasetSpec,
    build_corpus,
    generate,
    split_indices,
    write_dataset_dir,
    write_manifest,
)
from .errors import InputError, SentGraphError
from .evaluation import (
    SampleReport,
    SbmParams,
    calibrate_sbm_tolerances,
    full_report,
    is_valid_planar,
    is_valid_sbm,
)
from .graphs import Graph
from .io import read_graphs, write_glist
from .models import (
    NGramModel,
    TinyTransformer,
    TrainConfig,
    TransformerConfig,
    UniformModel,
    evaluate_nll,
    load_model,
    sample_tokens,
    save_model,
    train,
)
from .rng import substream
from .trails import (
    prefix_is_induced,
    reconstruct,
    reconstruct_set,
    set_prefix_is_induced,
)
from .util import format_table, parallel_map
from .vocab import Vocab, read_token_file, write_token_file, write_vocab_header

_SAMPLE_TAG = 101
_PREFIX_TAG = 102


def _positive_fractions(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise InputError("split must be three comma-separated fractions")
    return tuple(parts)  # type: ignore[return-value]


def _add(parser: argparse.ArgumentParser, *names, **kw):
    kw.setdefault("default", None)
    parser.add_argument(*names, **kw)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sentgraph", description=__doc__)
    p.add_argument("--config", help="INI file whose [<subcommand>] section supplies defaults")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset directory")
    _add(g, "--out", required=True)
    _add(g, "--family", choices=["planar", "sbm", "tree", "cycle", "grid", "lobster", "er"])
    _add(g, "--count", type=int)
    _add(g, "--seed", type=int)
    _add(g, "--nodes", type=int)
    _add(g, "--nodes-max", type=int)
    _add(g, "--edge-prob", type=float)
    _add(g, "--rows", type=int)
    _add(g, "--cols", type=int)
    _add(g, "--backbone", type=int)
    _add(g, "--p1", type=float)
    _add(g, "--p2", type=float)
    _add(g, "--split", type=_positive_fractions)

    e = sub.add_parser("encode", help="encode graphs into a token corpus")
    _add(e, "--data", help="dataset dir: encodes graphs/{train,val}.glist into tokens/")
    _add(e, "--graphs", help="single graph container to encode")
    _add(e, "--out", help="output token file (with --graphs)")
    _add(e, "--samples-per-graph", type=int)
    _add(e, "--seed", type=int)
    _add(e, "--mode", choices=["sent", "set"])
    _add(e, "--max-nodes", type=int)
    _add(e, "--attributed", action=argparse.BooleanOptionalAction)

    d = sub.add_parser("decode", help="decode a token corpus back into graphs")
    _add(d, "--tokens", required=True)
    _add(d, "--out", required=True)
    _add(d, "--max-nodes", type=int, help="vocab cap when no sidecar header exists")
    _add(d, "--mode", choices=["sent", "set"])
    _add(d, "--lenient", action=argparse.BooleanOptionalAction)
    _add(d, "--attributed", action=argparse.BooleanOptionalAction)

    t = sub.add_parser("train", help="train a sequence model on a token corpus")
    _add(t, "--corpus")
    _add(t, "--val")
    _add(t, "--out", required=True)
    _add(t, "--model", choices=["transformer", "ngram"])
    _add(t, "--steps", type=int)
    _add(t, "--batch-size", type=int)
    _add(t, "--peak-lr", type=float)
    _add(t, "--warmup-frac", type=float)
    _add(t, "--weight-decay", type=float)
    _add(t, "--grad-clip", type=float)
    _add(t, "--dropout", type=float)
    _add(t, "--seed", type=int)
    _add(t, "--eval-every", type=int)
    _add(t, "--layers", type=int)
    _add(t, "--heads", type=int)
    _add(t, "--width", type=int)
    _add(t, "--context", type=int)
    _add(t, "--order", type=int)
    _add(t, "--delta", type=float)
    _add(t, "--resample-data", help="dataset dir for per-epoch re-encoding instead of --corpus")
    _add(t, "--samples-per-graph", type=int)
    _add(t, "--figures", action=argparse.BooleanOptionalAction)

    s = sub.add_parser("sample", help="sample graphs from a trained model")
    _add(s, "--checkpoint")
    _add(s, "--uniform-model", action=argparse.BooleanOptionalAction,
         help="sample from the uniform baseline instead of a checkpoint")
    _add(s, "--max-nodes", type=int, help="vocab cap for --uniform-model")
    _add(s, "--out", required=True)
    _add(s, "--count", type=int)
    _add(s, "--top-k", type=int)
    _add(s, "--temperature", type=float)
    _add(s, "--max-len", type=int)
    _add(s, "--seed", type=int)
    _add(s, "--constrained", action=argparse.BooleanOptionalAction)
    _add(s, "--mode", choices=["sent", "set"])
    _add(s, "--prefix", help="motif graph file; its SENT is replayed as the prefix")
    _add(s, "--motif-copies", type=int)
    _add(s, "--figures", action=argparse.BooleanOptionalAction)

    v = sub.add_parser("eval", help="MMD/VUN report for generated graphs")
    _add(v, "--generated", required=True)
    _add(v, "--train", required=True)
    _add(v, "--test", required=True)
    _add(v, "--validity", choices=["planar", "sbm", "none"])
    _add(v, "--tol-in", type=float)
    _add(v, "--tol-out", type=float)
    _add(v, "--out", required=True)
    _add(v, "--label")
    _add(v, "--figures", action=argparse.BooleanOptionalAction)

    a = sub.add_parser("ablate", help="paired SET-vs-SENT pipeline on one dataset")
    _add(a, "--data", required=True)
    _add(a, "--out", required=True)
    _add(a, "--samples-per-graph", type=int)
    _add(a, "--steps", type=int)
    _add(a, "--batch-size", type=int)
    _add(a, "--peak-lr", type=float)
    _add(a, "--dropout", type=float)
    _add(a, "--layers", type=int)
    _add(a, "--heads", type=int)
    _add(a, "--width", type=int)
    _add(a, "--context", type=int)
    _add(a, "--count", type=int)
    _add(a, "--top-k", type=int)
    _add(a, "--temperature", type=float)
    _add(a, "--max-len", type=int)
    _add(a, "--seed", type=int)
    _add(a, "--validity", choices=["planar", "sbm", "none"])
    _add(a, "--figures", action=argparse.BooleanOptionalAction)

    c = sub.add_parser("calibrate-sbm", help="self-consistency calibration of SBM validity")
    _add(c, "--count", type=int)
    _add(c, "--seed", type=int)
    _add(c, "--target", type=float)
    _add(c, "--out", required=True)
    _add(c, "--figures", action=argparse.BooleanOptionalAction)
    return p


_DEFAULTS: dict[str, dict] = {
    "gen-data": dict(family="planar", count=200, seed=0, nodes=64, nodes_max=None,
                     edge_prob=0.2, rows=4, cols=4, backbone=80, p1=0.7, p2=0.7, split=None),
    "encode": dict(data=None, graphs=None, out=None, samples_per_graph=32, seed=0,
                   mode="sent", max_nodes=None, attributed=False),
    "decode": dict(max_nodes=None, mode="sent", lenient=False, attributed=False),
    "train": dict(corpus=None, val=None, model="transformer", steps=2000, batch_size=32,
                  peak_lr=3e-3, warmup_frac=0.05, weight_decay=0.1, grad_clip=1.0,
                  dropout=0.1, seed=0, eval_every=100, layers=2, heads=4, width=128,
                  context=512, order=4, delta=0.1, resample_data=None,
                  samples_per_graph=32, figures=True),
    "sample": dict(checkpoint=None, uniform_model=False, max_nodes=None, count=64,
                   top_k=10, temperature=1.0, max_len=2048, seed=0, constrained=True,
                   mode="sent", prefix=None, motif_copies=1, figures=True),
    "eval": dict(validity="none", tol_in=0.1, tol_out=0.04, label="generated", figures=True),
    "ablate": dict(samples_per_graph=16, steps=600, batch_size=16, peak_lr=3e-3,
                   dropout=0.0, layers=2, heads=4, width=96, context=256, count=48,
                   top_k=10, temperature=1.0, max_len=512, seed=0, validity="planar",
                   figures=True),
    "calibrate-sbm": dict(count=100, seed=0, target=0.95, figures=True),
}

_REQUIRED_PATHS = {
    "gen-data": ["out"],
    "encode": ["data", "graphs", "out"],
    "decode": ["tokens", "out"],
    "train": ["out"],
    "sample": ["out"],
    "eval": ["generated", "train", "test", "out"],
    "ablate": ["data", "out"],
    "calibrate-sbm": ["out"],
}


# config-file types for keys whose hardcoded default is None
_CONFIG_TYPES = {"split": _positive_fractions, "nodes_max": int, "max_nodes": int}


def _coerce(key: str, raw: str, like):
    if key in _CONFIG_TYPES:
        return _CONFIG_TYPES[key](raw)
    if isinstance(like, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def effective_config(args: argparse.Namespace) -> dict:
    """Hardcoded defaults <- config-file section <- explicit CLI flags."""
    cmd = args.command
    eff = dict(_DEFAULTS[cmd])
    for key in _REQUIRED_PATHS[cmd]:
        eff.setdefault(key, None)
    if args.config:
        cp = configparser.ConfigParser()
        if not Path(args.config).exists():
            raise InputError(f"config file {args.config} not found")
        cp.read(args.config)
        if cp.has_section(cmd):
            for key, raw in cp.items(cmd):
                key = key.replace("-", "_")
                if key not in eff:
                    raise InputError(f"unknown config key {key!r} in section [{cmd}]")
                eff[key] = _coerce(key, raw, _DEFAULTS[cmd].get(key))
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        eff[key] = val
    return eff


def write_snapshot(out_dir: Path, command: str, eff: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"[{command}]"]
    for key in sorted(eff):
        val = eff[key]
        if isinstance(val, tuple):
            val = ",".join(f"{x:g}" for x in val)
        lines.append(f"{key.replace('_', '-')} = {val}")
    (out_dir / f"{command}.config").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_gen_data(eff: dict) -> int:
    out = Path(eff["out"])
    spec = DatasetSpec(
        family=eff["family"], count=eff["count"], seed=eff["seed"], nodes=eff["nodes"],
        nodes_max=eff["nodes_max"], edge_prob=eff["edge_prob"], rows=eff["rows"],
        cols=eff["cols"], backbone=eff["backbone"], p1=eff["p1"], p2=eff["p2"],
        split=eff["split"],
    )
    graphs, memberships = generate(spec)
    write_dataset_dir(out, spec, graphs, memberships)
    write_snapshot(out, "gen-data", eff)
    tr, va, te = split_indices(len(graphs), spec.split_fractions())
    print(f"wrote {len(graphs)} {spec.family} graphs to {out} "
          f"(split {len(tr)}/{len(va)}/{len(te)})")
    return 0


def _vocab_for_graphs(graphs: list[Graph], max_nodes: int | None, attributed: bool) -> Vocab:
    need = max((g.n for g in graphs), default=1)
    cap = max_nodes or need
    nl = el = 0
    if attributed:
        for g in graphs:
            if g.node_labels is None or g.edge_labels is None:
                raise InputError("attributed encoding needs labelled graphs")
            nl = max(nl, max(g.node_labels, default=-1) + 1)
            el = max([el - 1, *g.edge_labels.values()], default=-1) + 1
    return Vocab(max_nodes=cap, node_label_count=nl, edge_label_count=el)


def cmd_encode(eff: dict) -> int:
    mode = eff["mode"]
    if eff["data"]:
        root = Path(eff["data"])
        tdir = root / "tokens"
        tdir.mkdir(parents=True, exist_ok=True)
        splits = {}
        for name in ("train", "val"):
            path = root / "graphs" / f"{name}.glist"
            if not path.exists():
                raise InputError(f"{path} not found")
            splits[name] = read_graphs(path)
        vocab = _vocab_for_graphs(sum(splits.values(), []), eff["max_nodes"], eff["attributed"])
        builds = {}
        for name, graphs in splits.items():
            build = build_corpus(graphs, eff["samples_per_graph"], vocab, seed=eff["seed"],
                                 attributed=eff["attributed"], mode=mode)
            write_token_file(tdir / f"{name}.tok", build.sequences, vocab)
            builds[name] = build
            if build.skipped:
                print(f"warning: skipped {len(build.skipped)} oversized graphs in {name}",
                      file=sys.stderr)
        write_manifest(
            root / "manifest",
            {
                "mode": mode,
                "seed": eff["seed"],
                "samples_per_graph": eff["samples_per_graph"],
                "vocab": vocab.key,
                "train_sequences": len(builds["train"].sequences),
                "val_sequences": len(builds["val"].sequences),
            },
            builds["train"],
        )
        write_snapshot(root, "encode", eff)
        print(f"encoded {len(builds['train'].sequences)} train / "
              f"{len(builds['val'].sequences)} val sequences (vocab {vocab.key})")
        return 0
    if not eff["graphs"] or not eff["out"]:
        raise InputError("encode needs --data DIR or both --graphs and --out")
    graphs = read_graphs(eff["graphs"])
    vocab = _vocab_for_graphs(graphs, eff["max_nodes"], eff["attributed"])
    build = build_corpus(graphs, eff["samples_per_graph"], vocab, seed=eff["seed"],
                         attributed=eff["attributed"], mode=mode)
    out = Path(eff["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_token_file(out, build.sequences, vocab)
    write_snapshot(out.parent, "encode", eff)
    print(f"encoded {len(build.sequences)} sequences to {out}")
    return 0


def cmd_decode(eff: dict) -> int:
    seqs, vocab = read_token_file(eff["tokens"])
    if vocab is None:
        if not eff["max_nodes"]:
            raise InputError("no vocab sidecar found: pass --max-nodes")
        vocab = Vocab(max_nodes=eff["max_nodes"])
    graphs = []
    for i, seq in enumerate(seqs):
        if eff["mode"] == "set":
            g, _ = decode_graph_set(seq, vocab, strict=not eff["lenient"])
        else:
            g, _ = decode_graph(seq, vocab, attributed=eff["attributed"],
                                strict=not eff["lenient"])
        g.graph_id = str(i)
        graphs.append(g)
    out = Path(eff["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_glist(out, graphs)
    write_snapshot(out.parent, "decode", eff)
    print(f"decoded {len(graphs)} graphs to {out}")
    return 0


def cmd_train(eff: dict) -> int:
    out = Path(eff["out"])
    out.mkdir(parents=True, exist_ok=True)
    corpus_provider = None
    if eff["resample_data"]:
        root = Path(eff["resample_data"])
        graphs = read_graphs(root / "graphs" / "train.glist")
        val_graphs = read_graphs(root / "graphs" / "val.glist")
        vocab = _vocab_for_graphs(graphs + val_graphs, None, False)
        base_seed = eff["seed"]

        def corpus_provider(epoch: int):
            build = build_corpus(graphs, eff["samples_per_graph"], vocab,
                                 seed=base_seed + 7919 * epoch)
            return [s.tokens for s in build.sequences]

        corpus = corpus_provider(0)
        val_build = build_corpus(val_graphs, 1, vocab, seed=base_seed + 13)
        val_corpus = [s.tokens for s in val_build.sequences]
    else:
        if not eff["corpus"]:
            raise InputError("train needs --corpus FILE or --resample-data DIR")
        corpus, vocab = read_token_file(eff["corpus"])
        if vocab is None:
            raise InputError(f"missing vocab sidecar next to {eff['corpus']}")
        val_corpus = None
        if eff["val"]:
            val_corpus, _ = read_token_file(eff["val"])

    cfg = TrainConfig(
        steps=eff["steps"], batch_size=eff["batch_size"], peak_lr=eff["peak_lr"],
        warmup_frac=eff["warmup_frac"], weight_decay=eff["weight_decay"],
        grad_clip=eff["grad_clip"], dropout=eff["dropout"], seed=eff["seed"],
        eval_every=eff["eval_every"],
    )
    if eff["model"] == "transformer":
        model = TinyTransformer(
            TransformerConfig(vocab_size=vocab.size, layers=eff["layers"],
                              heads=eff["heads"], width=eff["width"],
                              context=eff["context"]),
            seed=eff["seed"],
        )
    else:
        model = NGramModel(vocab_size=vocab.size, order=eff["order"], delta=eff["delta"])
    result = train(model, corpus, cfg, val_corpus=val_corpus, corpus_provider=corpus_provider)
    save_model(out / "model.ckpt", model, vocab=vocab, seed=eff["seed"])
    result.write_curve(out / "loss.csv")
    write_snapshot(out, "train", eff)
    if eff["figures"] and result.curve:
        from .report import save_loss_curve

        save_loss_curve(result.curve, out / "figures" / "loss_curve.png")
    final = result.curve[-1] if result.curve else (0, float("nan"), float("nan"))
    print(f"trained {eff['model']} for {cfg.steps} steps; final train NLL {final[1]:.4f}")
    return 0


def _motif_prefix_tokens(path: str, copies: int, vocab: Vocab, seed: int) -> list[int]:
    """Encode a motif graph as the conditioning prefix. Multiple copies become
    successive segments of one SENT, each copy's ids offset past the last."""
    motifs = read_graphs(path)
    if not motifs:
        raise InputError(f"no graph found in {path}")
    motif = motifs[0]
    enc = encode_graph(motif, Vocab(max_nodes=vocab.max_nodes), substream(seed, _PREFIX_TAG))
    segs = enc.sent.segments
    from .codec import tokenize
    from .trails import NbTuple, Sent

    all_segments = []
    for c in range(copies):
        off = c * motif.n
        for seg in segs:
            all_segments.append([
                NbTuple(t.node + off, tuple(u + off for u in t.nbset)) for t in seg
            ])
    combined = Sent(all_segments)
    toks = tokenize(combined, vocab)
    return list(toks.tokens[1:-1])  # strip BOS/EOS: the prefix stays open


def cmd_sample(eff: dict) -> int:
    out = Path(eff["out"])
    out.mkdir(parents=True, exist_ok=True)
    if eff["uniform_model"]:
        if not eff["max_nodes"]:
            raise InputError("--uniform-model needs --max-nodes")
        vocab = Vocab(max_nodes=eff["max_nodes"])
        model = UniformModel(vocab.size)
    else:
        if not eff["checkpoint"]:
            raise InputError("sample needs --checkpoint or --uniform-model")
        model, header = load_model(eff["checkpoint"])
        vmeta = header.get("vocab")
        if vmeta:
            vocab = Vocab(**vmeta)
        elif eff["max_nodes"]:
            vocab = Vocab(max_nodes=eff["max_nodes"])
        else:
            raise InputError("checkpoint lacks vocab metadata: pass --max-nodes")
    attributed = vocab.attributed and eff["mode"] == "sent"
    prefix = None
    if eff["prefix"]:
        prefix = _motif_prefix_tokens(eff["prefix"], eff["motif_copies"], vocab, eff["seed"])
        grammar.replay([1] + prefix, vocab, attributed)  # abort early with rule code

    def one(i: int):
        rng = substream(eff["seed"], _SAMPLE_TAG, i)
        return sample_tokens(
            model, vocab, rng, k=eff["top_k"], temperature=eff["temperature"],
            max_len=eff["max_len"], constrained=eff["constrained"],
            attributed=attributed, prefix_tokens=prefix, mode=eff["mode"],
        )

    results = parallel_map(one, list(range(eff["count"])))
    graphs = []
    log_lines = []
    for i, res in enumerate(results):
        entry = {
            "index": i,
            "length": len(res.tokens),
            "truncated": res.truncated,
            "parse_mode": "constrained" if res.constrained else "free",
            "ok": True,
        }
        try:
            if eff["mode"] == "set":
                g, _ = decode_graph_set(res.tokens, vocab, strict=False)
            else:
                g, _ = decode_graph(res.tokens, vocab, attributed=attributed, strict=False)
            g.graph_id = str(i)
            graphs.append(g)
        except SentGraphError as exc:
            entry["ok"] = False
            entry["error"] = str(exc)
        log_lines.append(json.dumps(entry, sort_keys=True))
    write_glist(out / "generated.glist", graphs)
    (out / "sample.log.jsonl").write_text("\n".join(log_lines) + "\n")
    write_snapshot(out, "sample", eff)
    if eff["figures"]:
        from .report import save_graph_gallery

        save_graph_gallery(graphs, out / "figures" / "gallery.png")
    print(f"sampled {len(results)} sequences, decoded {len(graphs)} graphs to {out}")
    return 0


def _validity_fn(name: str, tol_in: float, tol_out: float):
    if name == "planar":
        return is_valid_planar
    if name == "sbm":
        params = SbmParams(tol_in=tol_in, tol_out=tol_out)
        return lambda g: is_valid_sbm(g, params)
    return None


def cmd_eval(eff: dict) -> int:
    generated = read_graphs(eff["generated"])
    train_graphs = read_graphs(eff["train"])
    test_graphs = read_graphs(eff["test"])
    validity = _validity_fn(eff["validity"], eff["tol_in"], eff["tol_out"])
    report = full_report(generated, train_graphs, test_graphs, validity)
    out = Path(eff["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.csv").write_text(
        SampleReport.CSV_HEADER + "\n" + report.to_csv_row() + "\n"
    )
    write_snapshot(out, "eval", eff)
    if eff["figures"]:
        from .report import save_report_figure

        save_report_figure(report, out / "figures" / "report.png", label=eff["label"])
    print(report.format_table(eff["label"]))
    if report.skipped_descriptors:
        print(f"(ratio skips zero-denominator descriptors: {report.skipped_descriptors})")
    return 0


def cmd_ablate(eff: dict) -> int:
    root = Path(eff["data"])
    out = Path(eff["out"])
    out.mkdir(parents=True, exist_ok=True)
    train_graphs = read_graphs(root / "graphs" / "train.glist")
    val_graphs = read_graphs(root / "graphs" / "val.glist")
    test_graphs = read_graphs(root / "graphs" / "test.glist")
    vocab = _vocab_for_graphs(train_graphs + val_graphs + test_graphs, None, False)
    validity = _validity_fn(eff["validity"], 0.1, 0.04)
    cfg = TrainConfig(steps=eff["steps"], batch_size=eff["batch_size"],
                      peak_lr=eff["peak_lr"], dropout=eff["dropout"], seed=eff["seed"],
                      eval_every=max(1, eff["steps"] // 10))
    reports: dict[str, SampleReport] = {}
    induced_stats: dict[str, tuple[int, int]] = {}
    for mode in ("sent", "set"):
        build = build_corpus(train_graphs, eff["samples_per_graph"], vocab,
                             seed=eff["seed"], mode=mode)
        val_build = build_corpus(val_graphs, 1, vocab, seed=eff["seed"] + 1, mode=mode)
        model = TinyTransformer(
            TransformerConfig(vocab_size=vocab.size, layers=eff["layers"],
                              heads=eff["heads"], width=eff["width"],
                              context=eff["context"]),
            seed=eff["seed"],
        )
        result = train(model, [s.tokens for s in build.sequences], cfg,
                       val_corpus=[s.tokens for s in val_build.sequences])
        result.write_curve(out / f"{mode}.loss.csv")
        save_model(out / f"{mode}.model.ckpt", model, vocab=vocab, seed=eff["seed"])

        def one(i: int, mode=mode, model=model):
            rng = substream(eff["seed"], _SAMPLE_TAG, i)
            return sample_tokens(model, vocab, rng, k=eff["top_k"],
                                 temperature=eff["temperature"], max_len=eff["max_len"],
                                 constrained=True, mode=mode)

        results = parallel_map(one, list(range(eff["count"])))
        graphs = []
        induced_ok = induced_total = 0
        for i, res in enumerate(results):
            try:
                if mode == "set":
                    s, _ = detokenize_set(res.tokens, vocab, lenient=True)
                    g = reconstruct_set(s)
                    for cut in range(1, len(s.flatten()) + 1):
                        induced_total += 1
                        induced_ok += set_prefix_is_induced(s, cut)
                else:
                    dec = detokenize_lenient(list(res.tokens), vocab)
                    g = reconstruct(dec.sent)
                    for cut in range(1, dec.sent.tuple_count() + 1):
                        induced_total += 1
                        induced_ok += prefix_is_induced(dec.sent, cut)
                g.graph_id = str(i)
                graphs.append(g)
            except SentGraphError:
                continue
        write_glist(out / f"{mode}.generated.glist", graphs)
        reports[mode] = full_report(graphs, train_graphs, test_graphs, validity)
        induced_stats[mode] = (induced_ok, induced_total)
        (out / f"{mode}.report.json").write_text(reports[mode].to_json() + "\n")
        (out / f"{mode}.report.csv").write_text(
            SampleReport.CSV_HEADER + "\n" + reports[mode].to_csv_row() + "\n"
        )

    rows = []
    for mode in ("sent", "set"):
        r = reports[mode]
        ok, total = induced_stats[mode]
        rows.append([
            mode.upper(), f"{r.mmd_deg:.4f}", f"{r.mmd_clus:.4f}", f"{r.mmd_orbit:.4f}",
            f"{r.mmd_spec:.4f}", f"{r.ratio:.2f}", f"{100 * r.vun:.1f}",
            f"{ok}/{total}",
        ])
    table = format_table(
        ["Encoding", "Deg.", "Clus.", "Orbit", "Spec.", "Ratio", "VUN", "InducedPrefixes"],
        rows,
    )
    (out / "ablate.txt").write_text(table + "\n")
    write_snapshot(out, "ablate", eff)
    if eff["figures"]:
        from .report import save_ablation_figure

        save_ablation_figure(reports["sent"], reports["set"], out / "figures" / "ablation.png")
    print(table)
    return 0


def cmd_calibrate_sbm(eff: dict) -> int:
    from .datasets import gen_sbm

    out = Path(eff["out"])
    out.mkdir(parents=True, exist_ok=True)
    fresh, _ = gen_sbm(eff["count"], seed=eff["seed"])
    params, table = calibrate_sbm_tolerances(fresh, target=eff["target"])
    lines = ["tol_in,tol_out,accept_rate"]
    lines += [f"{ti:g},{to:g},{rate:.4f}" for ti, to, rate in table]
    (out / "calibration.csv").write_text("\n".join(lines) + "\n")
    (out / "chosen.config").write_text(
        f"[eval]\nvalidity = sbm\ntol-in = {params.tol_in:g}\ntol-out = {params.tol_out:g}\n"
    )
    write_snapshot(out, "calibrate-sbm", eff)
    if eff["figures"]:
        from .report import save_calibration_figure

        save_calibration_figure(table, out / "figures" / "calibration.png")
    print(f"chosen tolerances: tol_in={params.tol_in:g} tol_out={params.tol_out:g}")
    return 0


_HANDLERS = {
    "gen-data": cmd_gen_data,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "train": cmd_train,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "calibrate-sbm": cmd_calibrate_sbm,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        eff = effective_config(args)
        return _HANDLERS[args.command](eff)
    except SentGraphError as exc:
        print(f"error[{exc.exit_code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error[2]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
