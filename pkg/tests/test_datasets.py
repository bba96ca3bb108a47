"""Dataset generators: construction properties and determinism."""

import numpy as np
import pytest

from sentgraph.datasets import (
    CorpusBuild,
    DatasetSpec,
    build_corpus,
    er_graph,
    gen_planar,
    gen_sbm,
    gen_simple_families,
    generate,
    grid_graph,
    lobster_graph,
    prufer_tree,
    split_indices,
)
from sentgraph.errors import InputError
from sentgraph.graphs import is_connected
from sentgraph.io import read_glist, write_glist
from sentgraph.rng import substream
from sentgraph.vocab import Vocab

from sentgraph import grammar


def test_planar_graphs_are_planar_and_connected():
    from sentgraph.evaluation import is_planar

    graphs = gen_planar(20, n_nodes=24, seed=3)
    for g in graphs:
        assert g.n == 24
        assert is_connected(g)
        assert g.m <= 3 * g.n - 6
        assert is_planar(g)


def test_planar_default_matches_paper_size():
    g = gen_planar(1, seed=0)[0]
    assert g.n == 64


def test_planar_determinism():
    a = gen_planar(5, n_nodes=16, seed=9)
    b = gen_planar(5, n_nodes=16, seed=9)
    for x, y in zip(a, b):
        assert x.edges == y.edges


def test_sbm_construction_bounds():
    graphs, mems = gen_sbm(30, seed=4)
    for g, mem in zip(graphs, mems):
        k = len(set(mem))
        assert 2 <= k <= 5
        assert 40 <= g.n <= 200
        sizes = [mem.count(c) for c in range(k)]
        assert all(20 <= s <= 40 for s in sizes)


def test_sbm_intra_density_monte_carlo():
    graphs, mems = gen_sbm(100, seed=5)
    intra_edges = 0
    intra_pairs = 0
    for g, mem in zip(graphs, mems):
        mem = np.asarray(mem)
        same = mem[:, None] == mem[None, :]
        for u, v in g.edges:
            if mem[u] == mem[v]:
                intra_edges += 1
        intra_pairs += (np.triu(same, 1)).sum()
    density = intra_edges / intra_pairs
    assert abs(density - 0.3) < 0.02


def test_prufer_tree_is_tree():
    rng = substream(71)
    for _ in range(50):
        n = int(rng.integers(1, 40))
        t = prufer_tree(n, rng)
        assert t.n == n
        assert t.m == n - 1 if n > 1 else t.m == 0
        assert is_connected(t)


def test_cycle_family_all_degree_two():
    spec = DatasetSpec(family="cycle", count=5, seed=1, nodes=12)
    for g in gen_simple_families(spec):
        assert all(g.degree(v) == 2 for v in range(g.n))


def test_er_mean_edge_count():
    # binomial expectation: 0.2 * C(50,2) = 245
    rng = substream(72)
    counts = [er_graph(50, 0.2, substream(72, i)).m for i in range(200)]
    assert abs(np.mean(counts) - 245) < 10


def test_grid_and_lobster_shapes():
    g = grid_graph(3, 4)
    assert g.n == 12 and g.m == 17
    lob = lobster_graph(20, 0.7, 0.7, substream(73))
    assert is_connected(lob)
    # lobsters are trees
    assert lob.m == lob.n - 1


def test_split_indices_paper_planar():
    spec = DatasetSpec(family="planar", count=200)
    tr, va, te = split_indices(200, spec.split_fractions())
    assert (len(tr), len(va), len(te)) == (128, 32, 40)


def test_split_indices_default():
    spec = DatasetSpec(family="tree", count=100)
    tr, va, te = split_indices(100, spec.split_fractions())
    assert (len(tr), len(va), len(te)) == (80, 10, 10)


def test_build_corpus_counts_and_parseability():
    graphs = gen_planar(16, n_nodes=12, seed=6)
    v = Vocab(max_nodes=12)
    build = build_corpus(graphs, samples_per_graph=1, vocab=v, seed=7)
    assert len(build.sequences) == 16
    for seq in build.sequences:
        st = grammar.replay(seq.tokens, v)
        assert st.done


def test_build_corpus_determinism_and_seed_sensitivity():
    graphs = gen_planar(8, n_nodes=12, seed=8)
    v = Vocab(max_nodes=12)
    a = build_corpus(graphs, 2, v, seed=1)
    b = build_corpus(graphs, 2, v, seed=1)
    assert [s.tokens for s in a.sequences] == [s.tokens for s in b.sequences]
    c = build_corpus(graphs, 2, v, seed=2)
    assert [s.tokens for s in a.sequences] != [s.tokens for s in c.sequences]


def test_build_corpus_skips_oversized():
    graphs = gen_planar(2, n_nodes=12, seed=9) + gen_planar(1, n_nodes=24, seed=9)
    v = Vocab(max_nodes=12)
    build = build_corpus(graphs, 1, v, seed=0)
    assert build.skipped == [2]
    assert len(build.sequences) == 2


def test_glist_roundtrip(tmp_path):
    graphs, _ = generate(DatasetSpec(family="tree", count=5, seed=2, nodes=9))
    path = tmp_path / "t.glist"
    write_glist(path, graphs)
    back = read_glist(path)
    assert len(back) == 5
    for g, h in zip(graphs, back):
        assert g.edges == h.edges and g.n == h.n


def test_glist_arbitrary_ids(tmp_path):
    path = tmp_path / "weird.glist"
    path.write_text("# graph x\ne 10 30\ne 30 20\n")
    (g,) = read_glist(path)
    assert g.n == 3 and g.m == 2
    # sorted-id remap: 10->0, 20->1, 30->2
    assert g.edges == {(0, 2), (1, 2)}


def test_jsonl_roundtrip(tmp_path):
    from sentgraph.io import read_graphs, write_jsonl

    graphs, _ = generate(DatasetSpec(family="er", count=3, seed=0, nodes=8, edge_prob=0.4))
    path = tmp_path / "g.jsonl"
    write_jsonl(path, graphs)
    back = read_graphs(path)
    assert all(g.edges == h.edges for g, h in zip(graphs, back))
