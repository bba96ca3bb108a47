"""Synthetic dataset generation and token-corpus assembly.

Families: planar (Delaunay triangulations of uniform points), stochastic
block models, and the simple generator families (trees, cycles, grids,
lobsters, Erdos-Renyi). Per-graph generation is keyed by (seed, family,
index) substreams, so datasets are reproducible under any parallel split.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .codec import encode_graph, encode_graph_set
from .errors import InputError
from .graphs import Graph, cycle_graph, is_connected
from .rng import substream
from .vocab import TokenSeq, Vocab, write_token_file, write_vocab_header

_FAMILY_TAGS = {
    "planar": 1,
    "sbm": 2,
    "tree": 3,
    "cycle": 4,
    "grid": 5,
    "lobster": 6,
    "er": 7,
}

PAPER_PLANAR_SPLIT = (128, 32, 40)


@dataclass
class DatasetSpec:
    family: str
    count: int
    seed: int = 0
    nodes: int = 64              # planar/tree/cycle/er size
    nodes_max: int | None = None  # draw sizes uniformly from [nodes, nodes_max]
    edge_prob: float = 0.2       # er
    rows: int = 4                # grid
    cols: int = 4
    backbone: int = 80           # lobster
    p1: float = 0.7
    p2: float = 0.7
    communities: tuple[int, int] = (2, 5)      # sbm
    community_size: tuple[int, int] = (20, 40)
    p_in: float = 0.3
    p_out: float = 0.05
    split: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.family not in _FAMILY_TAGS:
            raise InputError(f"unknown family {self.family!r}")
        if self.count < 1:
            raise InputError("count must be >= 1")
        if self.split is not None and abs(sum(self.split) - 1.0) > 1e-9:
            raise InputError("split fractions must sum to 1")

    def split_fractions(self) -> tuple[float, float, float]:
        if self.split is not None:
            return self.split
        if self.family == "planar":
            total = sum(PAPER_PLANAR_SPLIT)
            return tuple(c / total for c in PAPER_PLANAR_SPLIT)
        return (0.8, 0.1, 0.1)


def _size(spec: DatasetSpec, rng) -> int:
    if spec.nodes_max is None or spec.nodes_max <= spec.nodes:
        return spec.nodes
    return int(rng.integers(spec.nodes, spec.nodes_max + 1))


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


def delaunay_graph(n_nodes: int, rng: np.random.Generator) -> Graph:
    """Delaunay triangulation of uniform points in the unit square.

    Degenerate point sets (qhull failures on collinear/coincident points)
    are resampled from the same stream.
    """
    if n_nodes < 3:
        raise InputError("delaunay_graph needs n >= 3")
    for _ in range(64):
        pts = rng.random((n_nodes, 2))
        try:
            tri = Delaunay(pts)
        except QhullError:
            continue
        edges = set()
        for simplex in tri.simplices:
            a, b, c = (int(x) for x in simplex)
            edges.update([tuple(sorted((a, b))), tuple(sorted((b, c))), tuple(sorted((a, c)))])
        g = Graph.make(n_nodes, edges)
        if is_connected(g):
            return g
    raise InputError("could not triangulate after 64 attempts")


def gen_planar(count: int, n_nodes: int = 64, seed: int = 0) -> list[Graph]:
    return [
        delaunay_graph(n_nodes, substream(seed, _FAMILY_TAGS["planar"], i))
        for i in range(count)
    ]


def sbm_graph(
    rng: np.random.Generator,
    communities: tuple[int, int] = (2, 5),
    community_size: tuple[int, int] = (20, 40),
    p_in: float = 0.3,
    p_out: float = 0.05,
) -> tuple[Graph, list[int]]:
    """One stochastic-block-model graph plus its community assignment."""
    k = int(rng.integers(communities[0], communities[1] + 1))
    sizes = [int(rng.integers(community_size[0], community_size[1] + 1)) for _ in range(k)]
    membership: list[int] = []
    for c, s in enumerate(sizes):
        membership.extend([c] * s)
    n = len(membership)
    mem = np.asarray(membership)
    prob = np.where(mem[:, None] == mem[None, :], p_in, p_out)
    draw = rng.random((n, n))
    upper = np.triu(draw < prob, k=1)
    edges = [(int(u), int(v)) for u, v in zip(*np.nonzero(upper))]
    return Graph.make(n, edges), membership


def gen_sbm(
    count: int,
    seed: int = 0,
    communities: tuple[int, int] = (2, 5),
    community_size: tuple[int, int] = (20, 40),
    p_in: float = 0.3,
    p_out: float = 0.05,
) -> tuple[list[Graph], list[list[int]]]:
    graphs, memberships = [], []
    for i in range(count):
        g, mem = sbm_graph(
            substream(seed, _FAMILY_TAGS["sbm"], i), communities, community_size, p_in, p_out
        )
        graphs.append(g)
        memberships.append(mem)
    return graphs, memberships


def prufer_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform random labelled tree via Prufer decoding."""
    if n < 1:
        raise InputError("tree needs n >= 1")
    if n == 1:
        return Graph.make(1, [])
    if n == 2:
        return Graph.make(2, [(0, 1)])
    seq = [int(rng.integers(0, n)) for _ in range(n - 2)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return Graph.make(n, edges)


def grid_graph(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1:
        raise InputError("grid needs positive dimensions")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.make(rows * cols, edges)


def lobster_graph(expected_nodes: int, p1: float, p2: float, rng: np.random.Generator) -> Graph:
    """Random lobster: a path backbone with legs (prob p1) and toes (p2)."""
    llen = max(2, int(2 * rng.random() * expected_nodes + 0.5))
    edges = [(i, i + 1) for i in range(llen - 1)]
    current = llen - 1
    for b in range(llen):
        if rng.random() < p1:
            current += 1
            edges.append((b, current))
            leg = current
            if rng.random() < p2:
                current += 1
                edges.append((leg, current))
    return Graph.make(current + 1, edges)


def er_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    if n < 1:
        raise InputError("er needs n >= 1")
    draw = rng.random((n, n))
    upper = np.triu(draw < p, k=1)
    edges = [(int(u), int(v)) for u, v in zip(*np.nonzero(upper))]
    return Graph.make(n, edges)


def gen_simple_families(spec: DatasetSpec) -> list[Graph]:
    """Trees, cycles, grids, lobsters, Erdos-Renyi."""
    tag = _FAMILY_TAGS[spec.family]
    out = []
    for i in range(spec.count):
        rng = substream(spec.seed, tag, i)
        if spec.family == "tree":
            out.append(prufer_tree(_size(spec, rng), rng))
        elif spec.family == "cycle":
            out.append(cycle_graph(max(3, _size(spec, rng))))
        elif spec.family == "grid":
            out.append(grid_graph(spec.rows, spec.cols))
        elif spec.family == "lobster":
            out.append(lobster_graph(spec.backbone, spec.p1, spec.p2, rng))
        elif spec.family == "er":
            out.append(er_graph(_size(spec, rng), spec.edge_prob, rng))
        else:
            raise InputError(f"{spec.family} is not a simple family")
    return out


def generate(spec: DatasetSpec) -> tuple[list[Graph], list[list[int]] | None]:
    """Dispatch to the family generator; SBM also returns memberships."""
    if spec.family == "planar":
        return gen_planar(spec.count, spec.nodes, spec.seed), None
    if spec.family == "sbm":
        graphs, mem = gen_sbm(
            spec.count, spec.seed, spec.communities, spec.community_size, spec.p_in, spec.p_out
        )
        return graphs, mem
    return gen_simple_families(spec), None


def split_indices(count: int, fractions: tuple[float, float, float]) -> tuple[range, range, range]:
    n_train = int(round(count * fractions[0]))
    n_val = int(round(count * fractions[1]))
    n_train = min(n_train, count)
    n_val = min(n_val, count - n_train)
    return range(0, n_train), range(n_train, n_train + n_val), range(n_train + n_val, count)


# ---------------------------------------------------------------------------
# Corpus assembly
# ---------------------------------------------------------------------------


@dataclass
class CorpusBuild:
    sequences: list[TokenSeq]
    lineage: list[tuple[int, int, int]] = field(default_factory=list)  # seq, graph, sample
    skipped: list[int] = field(default_factory=list)


def build_corpus(
    graphs: Sequence[Graph],
    samples_per_graph: int,
    vocab: Vocab,
    seed: int = 0,
    attributed: bool = False,
    mode: str = "sent",
) -> CorpusBuild:
    """Independent SENT (or SET) encodings per graph, substreamed by
    (seed, graph index, sample index). Graphs larger than the vocab's node
    cap are skipped and reported."""
    if samples_per_graph < 1:
        raise InputError("samples_per_graph must be >= 1")
    build = CorpusBuild([])
    for gi, g in enumerate(graphs):
        if g.n > vocab.max_nodes:
            build.skipped.append(gi)
            continue
        for si in range(samples_per_graph):
            rng = substream(seed, gi, si)
            if mode == "sent":
                toks = encode_graph(g, vocab, rng, attributed=attributed).tokens
            elif mode == "set":
                toks = encode_graph_set(g, vocab, rng)
            else:
                raise InputError(f"unknown corpus mode {mode}")
            build.lineage.append((len(build.sequences), gi, si))
            build.sequences.append(toks)
    return build


def write_manifest(path: str | Path, header: dict, build: CorpusBuild):
    lines = [f"{k}={v}" for k, v in header.items()]
    if build.skipped:
        lines.append("skipped_graphs=" + ",".join(map(str, build.skipped)))
    for seq_i, graph_i, sample_i in build.lineage:
        lines.append(f"seq {seq_i} graph {graph_i} sample {sample_i}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_dataset_dir(
    root: str | Path,
    spec: DatasetSpec,
    graphs: list[Graph],
    memberships: list[list[int]] | None,
):
    """graphs/{train,val,test}.glist layout plus SBM community sidecars."""
    from .io import write_glist

    root = Path(root)
    gdir = root / "graphs"
    gdir.mkdir(parents=True, exist_ok=True)
    tr, va, te = split_indices(len(graphs), spec.split_fractions())
    for name, idx in (("train", tr), ("val", va), ("test", te)):
        write_glist(gdir / f"{name}.glist", [graphs[i] for i in idx])
        if memberships is not None:
            lines = [" ".join(map(str, memberships[i])) for i in idx]
            (gdir / f"{name}.communities").write_text("\n".join(lines) + "\n")
