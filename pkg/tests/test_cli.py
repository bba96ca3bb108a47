"""End-to-end CLI runs: every subcommand, config files, exit codes."""

import json
from pathlib import Path

import pytest

from sentgraph.canon import are_isomorphic
from sentgraph.cli import main
from sentgraph.io import read_graphs
from sentgraph.evaluation import is_planar


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data") / "planar12"
    rc = run("gen-data", "--out", root, "--family", "planar", "--count", "25",
             "--nodes", "12", "--seed", "3", "--split", "0.6,0.2,0.2")
    assert rc == 0
    return root


def test_gen_data_layout_and_planarity(dataset):
    for name, count in (("train", 15), ("val", 5), ("test", 5)):
        graphs = read_graphs(dataset / "graphs" / f"{name}.glist")
        assert len(graphs) == count
        assert all(is_planar(g) for g in graphs)
    assert (dataset / "gen-data.config").exists()


def test_gen_data_determinism(tmp_path, dataset):
    other = tmp_path / "again"
    rc = run("gen-data", "--out", other, "--family", "planar", "--count", "25",
             "--nodes", "12", "--seed", "3", "--split", "0.6,0.2,0.2")
    assert rc == 0
    for name in ("train", "val", "test"):
        a = (dataset / "graphs" / f"{name}.glist").read_bytes()
        b = (other / "graphs" / f"{name}.glist").read_bytes()
        assert a == b


def test_gen_data_sbm_writes_communities(tmp_path):
    root = tmp_path / "sbm"
    rc = run("gen-data", "--out", root, "--family", "sbm", "--count", "5", "--seed", "1",
             "--split", "0.6,0.2,0.2")
    assert rc == 0
    graphs = read_graphs(root / "graphs" / "train.glist")
    comms = (root / "graphs" / "train.communities").read_text().splitlines()
    assert len(comms) == len(graphs)
    for g, line in zip(graphs, comms):
        mem = line.split()
        assert len(mem) == g.n
        assert 2 <= len(set(mem)) <= 5


def test_encode_decode_round_trip(dataset, tmp_path):
    rc = run("encode", "--data", dataset, "--samples-per-graph", "2", "--seed", "5")
    assert rc == 0
    tok = dataset / "tokens" / "train.tok"
    assert tok.exists() and (dataset / "tokens" / "train.tok.vocab").exists()
    assert (dataset / "manifest").exists()
    lines = tok.read_text().splitlines()
    assert len(lines) == 30  # 15 train graphs x 2 samples

    decoded = tmp_path / "back.glist"
    rc = run("decode", "--tokens", tok, "--out", decoded)
    assert rc == 0
    graphs = read_graphs(dataset / "graphs" / "train.glist")
    back = read_graphs(decoded)
    for i, h in enumerate(back):
        assert are_isomorphic(graphs[i // 2], h)


def test_encode_set_mode_has_no_nbset_tokens(dataset):
    out = dataset / "tokens" / "train_set.tok"
    rc = run("encode", "--graphs", dataset / "graphs" / "train.glist", "--out", out,
             "--mode", "set", "--samples-per-graph", "1", "--seed", "2")
    assert rc == 0
    for line in out.read_text().splitlines():
        toks = set(int(t) for t in line.split())
        assert 4 not in toks and 5 not in toks  # '<' and '>'


def test_encode_token_length_law(dataset):
    from sentgraph.codec import sent_token_length
    from sentgraph.vocab import BREAK, read_token_file

    seqs, vocab = read_token_file(dataset / "tokens" / "train.tok")
    graphs = read_graphs(dataset / "graphs" / "train.glist")
    for i, seq in enumerate(seqs):
        g = graphs[i // 2]
        k = sum(1 for t in seq if t == BREAK) + 1
        assert len(seq) - 2 == sent_token_length(g.n, g.m, k)


def test_train_sample_eval_pipeline(dataset, tmp_path):
    run_dir = tmp_path / "run"
    rc = run("train", "--corpus", dataset / "tokens" / "train.tok",
             "--val", dataset / "tokens" / "val.tok", "--out", run_dir,
             "--model", "ngram", "--order", "3", "--delta", "0.05")
    assert rc == 0
    assert (run_dir / "model.ckpt").exists()
    assert (run_dir / "loss.csv").exists()

    sample_dir = tmp_path / "samples"
    rc = run("sample", "--checkpoint", run_dir / "model.ckpt", "--out", sample_dir,
             "--count", "16", "--top-k", "8", "--seed", "4", "--max-len", "256")
    assert rc == 0
    gen = read_graphs(sample_dir / "generated.glist")
    assert len(gen) == 16  # constrained: all parse
    log = [json.loads(l) for l in (sample_dir / "sample.log.jsonl").read_text().splitlines()]
    assert all(e["ok"] for e in log)
    assert (sample_dir / "figures" / "gallery.png").exists()

    eval_dir = tmp_path / "eval"
    rc = run("eval", "--generated", sample_dir / "generated.glist",
             "--train", dataset / "graphs" / "train.glist",
             "--test", dataset / "graphs" / "test.glist",
             "--validity", "planar", "--out", eval_dir)
    assert rc == 0
    report = json.loads((eval_dir / "report.json").read_text())
    assert set(report["mmd"]) == {"deg", "clus", "orbit", "spec"}
    assert 0 <= report["vun"] <= 1
    assert (eval_dir / "report.csv").exists()
    assert (eval_dir / "figures" / "report.png").exists()


def test_train_transformer_smoke_and_loss_figure(dataset, tmp_path):
    run_dir = tmp_path / "t"
    rc = run("train", "--corpus", dataset / "tokens" / "train.tok", "--out", run_dir,
             "--model", "transformer", "--steps", "30", "--batch-size", "4",
             "--width", "32", "--heads", "2", "--layers", "1", "--context", "128",
             "--dropout", "0.0", "--eval-every", "10")
    assert rc == 0
    assert (run_dir / "figures" / "loss_curve.png").exists()
    text = (run_dir / "loss.csv").read_text().splitlines()
    assert text[0] == "step,train_nll,val_nll"
    assert len(text) > 2


def test_sample_determinism(tmp_path, dataset):
    ckpt_dir = tmp_path / "m"
    run("train", "--corpus", dataset / "tokens" / "train.tok", "--out", ckpt_dir,
        "--model", "ngram")
    outs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        rc = run("sample", "--checkpoint", ckpt_dir / "model.ckpt", "--out", d,
                 "--count", "8", "--seed", "11", "--no-figures")
        assert rc == 0
        outs.append((d / "generated.glist").read_bytes())
    assert outs[0] == outs[1]


def test_sample_uniform_model_unconstrained_logs_failures(tmp_path):
    d = tmp_path / "u"
    rc = run("sample", "--uniform-model", "--max-nodes", "12", "--out", d,
             "--count", "30", "--no-constrained", "--top-k", "200", "--max-len", "48",
             "--seed", "3", "--no-figures")
    assert rc == 0
    log = [json.loads(l) for l in (d / "sample.log.jsonl").read_text().splitlines()]
    assert any(not e["ok"] or e["truncated"] for e in log)


def test_motif_conditioning_contains_induced_cycle(tmp_path):
    from sentgraph.graphs import cycle_graph, induced_subgraph
    from sentgraph.io import write_glist

    motif_file = tmp_path / "motif.glist"
    write_glist(motif_file, [cycle_graph(6)])
    d = tmp_path / "cond"
    rc = run("sample", "--uniform-model", "--max-nodes", "16", "--out", d,
             "--count", "24", "--seed", "9", "--prefix", motif_file,
             "--max-len", "256", "--no-figures")
    assert rc == 0
    gen = read_graphs(d / "generated.glist")
    assert len(gen) == 24
    c6 = cycle_graph(6)
    for g in gen:
        assert g.n >= 6
        sub = induced_subgraph(g, list(range(6)))
        assert are_isomorphic(sub, c6)


def test_config_file_with_cli_override(tmp_path, dataset):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[sample]\ncount = 5\nseed = 2\ntop-k = 3\nmax-nodes = 12\n"
                   "uniform-model = true\nfigures = false\n")
    d = tmp_path / "cfg_out"
    rc = run("--config", cfg, "sample", "--out", d, "--count", "7")
    assert rc == 0
    gen = read_graphs(d / "generated.glist")
    assert len(gen) == 7  # CLI --count wins over config
    snap = (d / "sample.config").read_text()
    assert "count = 7" in snap and "top-k = 3" in snap


def test_exit_codes(tmp_path):
    assert run("decode", "--tokens", "/nonexistent.tok", "--out", "/tmp/x.glist") == 2
    # contract violation: a token stream that breaks the grammar, decoded strictly
    bad = tmp_path / "bad.tok"
    bad.write_text("1 3 2\n")  # BOS / EOS: '/' straight after BOS
    assert run("decode", "--tokens", bad, "--out", tmp_path / "y.glist",
               "--max-nodes", "8") == 3


def test_eval_missing_file_is_input_error(tmp_path):
    rc = run("eval", "--generated", "/nope.glist", "--train", "/nope.glist",
             "--test", "/nope.glist", "--out", tmp_path / "e")
    assert rc == 2


def test_calibrate_sbm_smoke(tmp_path):
    d = tmp_path / "cal"
    rc = run("calibrate-sbm", "--count", "12", "--seed", "2", "--target", "0.8",
             "--out", d, "--no-figures")
    assert rc == 0
    lines = (d / "calibration.csv").read_text().splitlines()
    assert lines[0] == "tol_in,tol_out,accept_rate"
    assert (d / "chosen.config").exists()
