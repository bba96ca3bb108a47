"""Segmented Eulerian neighborhood trails (SENTs) and plain segmented
Eulerian trails (SETs): sampling, reindexing, reconstruction, validation.

A SENT is a sequence of segments; each segment is a sequence of
(node, neighborhood-set) tuples. A tuple (v, A) contributes the edges
(v, u) for u in A; consecutive tuples in one segment contribute trail
edges. When these generated edge sets are pairwise disjoint and together
cover a graph's edges, the SENT encodes that graph losslessly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ContractViolation, InputError
from .graphs import Graph, norm_edge
from .rng import choice_index


@dataclass(frozen=True)
class NbTuple:
    node: int
    nbset: tuple[int, ...]


@dataclass
class Sent:
    segments: list[list[NbTuple]]

    def flatten(self) -> list[NbTuple]:
        return [t for seg in self.segments for t in seg]

    def node_sequence(self) -> list[int]:
        return [t.node for t in self.flatten()]

    def tuple_count(self) -> int:
        return sum(len(seg) for seg in self.segments)

    def node_count(self) -> int:
        return len(generated_nodes(self))

    def segment_count(self) -> int:
        return len(self.segments)


@dataclass
class Set_:
    """Ablation variant: segments are plain node sequences (no nbsets)."""

    segments: list[list[int]]

    def to_sent(self) -> Sent:
        return Sent([[NbTuple(v, ()) for v in seg] for seg in self.segments])

    def flatten(self) -> list[int]:
        return [v for seg in self.segments for v in seg]


def generated_nodes(s: Sent) -> set[int]:
    nodes: set[int] = set()
    for t in s.flatten():
        nodes.add(t.node)
        nodes.update(t.nbset)
    return nodes


def _edge_stream(s: Sent) -> Iterator[tuple[int, int]]:
    """Trail edges and nbset edges, in generation order."""
    for seg in s.segments:
        prev = None
        for t in seg:
            for u in t.nbset:
                yield norm_edge(t.node, u)
            if prev is not None:
                yield norm_edge(prev, t.node)
            prev = t.node


def generated_edges(s: Sent) -> set[tuple[int, int]]:
    """Generated edge set; raises if the disjointness invariant is broken."""
    edges: set[tuple[int, int]] = set()
    for e in _edge_stream(s):
        if e[0] == e[1]:
            raise ContractViolation(f"self-edge generated at node {e[0]}")
        if e in edges:
            raise ContractViolation(f"edge {e} generated twice (disjointness violation)")
        edges.add(e)
    return edges


def trail_step_count(s: Sent) -> int:
    return sum(len(seg) - 1 for seg in s.segments)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_sent(g: Graph, rng: np.random.Generator) -> Sent:
    """Sample a causal and Hamiltonian SENT covering g.

    Random trail traversal with breaks: follow an unvisited neighbor when one
    exists, otherwise break to a uniformly random unvisited node. Each tuple's
    neighborhood set collects all previously visited neighbors except the one
    reached through the trail, so every edge is generated exactly once.
    Runs in O(n + m): every node becomes the trail head exactly once and each
    adjacency list is scanned a constant number of times.
    """
    if g.n < 1:
        raise InputError("sample_sent requires at least one node")
    unvisited = list(range(g.n))
    pos = {v: i for i, v in enumerate(unvisited)}

    def take(v: int):
        i = pos.pop(v)
        last = unvisited.pop()
        if last != v:
            unvisited[i] = last
            pos[last] = i

    def draw_unvisited() -> int:
        return unvisited[choice_index(rng, len(unvisited))]

    segments: list[list[NbTuple]] = []
    v = draw_unvisited()
    take(v)
    trail = [NbTuple(v, ())]
    while unvisited:
        fresh = [u for u in g.adj[v] if u in pos]
        if not fresh:
            segments.append(trail)
            v = draw_unvisited()
            take(v)
            nbset = tuple(u for u in g.adj[v] if u not in pos)
            trail = [NbTuple(v, nbset)]
        else:
            u = fresh[choice_index(rng, len(fresh))]
            take(u)
            nbset = tuple(w for w in g.adj[u] if w != v and w not in pos)
            trail.append(NbTuple(u, nbset))
            v = u
    segments.append(trail)
    return Sent(segments)


def sample_set(g: Graph, rng: np.random.Generator) -> Set_:
    """Sample a SET: greedy random trail extension over unused edges, starting
    a new segment at a random node with unused incident edges when stuck.
    Isolated nodes are emitted as trailing length-1 segments.
    """
    if g.n < 1:
        raise InputError("sample_set requires at least one node")
    unused: list[set[int]] = [set(a) for a in g.adj]
    open_nodes = sorted(v for v in range(g.n) if unused[v])

    def draw_open() -> int:
        alive = [v for v in open_nodes if unused[v]]
        return alive[choice_index(rng, len(alive))]

    segments: list[list[int]] = []
    remaining = g.m
    while remaining > 0:
        v = draw_open()
        seg = [v]
        while unused[v]:
            cands = sorted(unused[v])
            u = cands[choice_index(rng, len(cands))]
            unused[v].discard(u)
            unused[u].discard(v)
            remaining -= 1
            seg.append(u)
            v = u
        segments.append(seg)
    for v in range(g.n):
        if g.degree(v) == 0:
            segments.append([v])
    if not segments:
        segments = [[v] for v in range(g.n)]
    return Set_(segments)


# ---------------------------------------------------------------------------
# Reindexing
# ---------------------------------------------------------------------------


def is_causal(s: Sent) -> bool:
    visited: set[int] = set()
    for t in s.flatten():
        if any(u not in visited for u in t.nbset):
            return False
        visited.add(t.node)
    return True


def reindex_map(s: Sent) -> dict[int, int]:
    """Old node id -> 1-based rank by first occurrence in the flattening."""
    mapping: dict[int, int] = {}
    for t in s.flatten():
        if t.node not in mapping:
            mapping[t.node] = len(mapping) + 1
        for u in t.nbset:
            if u not in mapping:
                mapping[u] = len(mapping) + 1
    return mapping


def reindex(s: Sent) -> Sent:
    """Rename nodes to 1..|V| by first occurrence; nbsets sorted ascending.

    Requires a causal input (so first occurrences all happen at tuple heads
    and the renamed sequence is invariant to the input graph's node order).
    """
    if not is_causal(s):
        raise ContractViolation("reindex requires a causal SENT")
    mapping = reindex_map(s)
    segments = [
        [NbTuple(mapping[t.node], tuple(sorted(mapping[u] for u in t.nbset))) for t in seg]
        for seg in s.segments
    ]
    return Sent(segments)


def reindex_set(s: Set_) -> Set_:
    mapping: dict[int, int] = {}
    for v in s.flatten():
        if v not in mapping:
            mapping[v] = len(mapping) + 1
    return Set_([[mapping[v] for v in seg] for seg in s.segments])


def is_reindexed(s: Sent) -> bool:
    nxt = 1
    for t in s.flatten():
        if t.node != nxt:
            return False
        if any(not (0 < u < nxt) for u in t.nbset):
            return False
        if list(t.nbset) != sorted(set(t.nbset)):
            return False
        nxt += 1
    return True


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------


def sent_node_order(s: Sent) -> list[int]:
    """Sorted distinct node ids; position in this list is the dense index
    used by reconstruct (for a reindexed SENT this is just id-1)."""
    return sorted(generated_nodes(s))


def reconstruct(s: Sent) -> Graph:
    """Generated graph of the SENT, remapped onto dense 0-based indices."""
    order = sent_node_order(s)
    if not order:
        raise InputError("cannot reconstruct a graph from an empty SENT")
    dense = {v: i for i, v in enumerate(order)}
    edges = {(dense[u], dense[v]) for u, v in generated_edges(s)}
    return Graph.make(len(order), edges)


def prefix_sent(s: Sent, tuple_count: int) -> Sent:
    if not (0 < tuple_count <= s.tuple_count()):
        raise InputError(f"tuple_count {tuple_count} out of range")
    segments: list[list[NbTuple]] = []
    left = tuple_count
    for seg in s.segments:
        if left <= 0:
            break
        take = min(left, len(seg))
        segments.append(list(seg[:take]))
        left -= take
    return Sent(segments)


def prefix_graph(s: Sent, tuple_count: int) -> Graph:
    """Graph generated by the prefix of the flattening ending after the
    given tuple. For causal semi-Hamiltonian SENTs this is an induced
    subgraph of reconstruct(s)."""
    return reconstruct(prefix_sent(s, tuple_count))


def prefix_is_induced(s: Sent, tuple_count: int) -> bool:
    """Does the prefix generate an induced subgraph of the full graph?

    Checked directly in SENT node-id space: every full-graph edge between
    two prefix nodes must already be generated by the prefix.
    """
    pre = prefix_sent(s, tuple_count)
    pre_nodes = generated_nodes(pre)
    pre_edges = generated_edges(pre)
    full_edges = generated_edges(s)
    for u, v in full_edges:
        if u in pre_nodes and v in pre_nodes and (u, v) not in pre_edges:
            return False
    return True


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class SentDiagnosis:
    disjoint: bool
    causal: bool
    hamiltonian: bool
    semi_hamiltonian: bool
    neighborhood_condition: bool | None = None
    neighborhood_condition_semi: bool | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        core = self.disjoint and self.causal and self.hamiltonian
        if self.neighborhood_condition is None:
            return core
        return core and self.neighborhood_condition


def validate_sent(s: Sent, g: Graph | None = None) -> SentDiagnosis:
    """Structured diagnosis of the SENT predicates; never raises.

    With a reference graph, additionally checks per tuple (v, A) that
    A equals N_G(v) intersected with the nodes visited strictly earlier,
    excluding the node linked to v through the trail.
    """
    notes: list[str] = []

    disjoint = True
    seen_edges: set[tuple[int, int]] = set()
    for e in _edge_stream(s):
        if e[0] == e[1] or e in seen_edges:
            disjoint = False
            notes.append(f"duplicate or degenerate edge {e}")
            break
        seen_edges.add(e)

    causal = is_causal(s)
    if not causal:
        notes.append("nbset references a node not yet visited")

    heads = s.node_sequence()
    hamiltonian = len(heads) == len(set(heads))

    semi = True
    seen_heads: set[int] = set()
    for seg in s.segments:
        for i, t in enumerate(seg):
            if t.node in seen_heads and (i != 0 or t.nbset):
                semi = False
            seen_heads.add(t.node)
    if not semi:
        notes.append("repeated node outside a segment start with empty nbset")

    cond = None
    cond_semi = None
    if g is not None:
        cond = True
        cond_semi = True
        visited: set[int] = set()
        for seg in s.segments:
            prev = None
            for t in seg:
                if not (0 <= t.node < g.n):
                    cond = cond_semi = False
                    notes.append(f"node {t.node} outside the reference graph")
                    break
                candidates = set(g.adj[t.node]) & visited
                if prev is not None:
                    candidates.discard(prev)
                if set(t.nbset) != candidates:
                    cond = False
                    if set(t.nbset):
                        cond_semi = False
                        notes.append(
                            f"tuple ({t.node}) nbset {sorted(t.nbset)} != expected {sorted(candidates)}"
                        )
                visited.add(t.node)
                prev = t.node

    return SentDiagnosis(
        disjoint=disjoint,
        causal=causal,
        hamiltonian=hamiltonian,
        semi_hamiltonian=semi,
        neighborhood_condition=cond,
        neighborhood_condition_semi=cond_semi,
        notes=notes,
    )


# --- SET counterparts used by the ablation --------------------------------


def set_generated_edges(s: Set_) -> set[tuple[int, int]]:
    return generated_edges(s.to_sent())


def reconstruct_set(s: Set_) -> Graph:
    return reconstruct(s.to_sent())


def set_prefix_is_induced(s: Set_, node_count: int) -> bool:
    """Induced-subgraph check for a prefix of the flattened node sequence."""
    flat = s.flatten()
    if not (0 < node_count <= len(flat)):
        raise InputError(f"node_count {node_count} out of range")
    segments: list[list[int]] = []
    left = node_count
    for seg in s.segments:
        if left <= 0:
            break
        take = min(left, len(seg))
        segments.append(list(seg[:take]))
        left -= take
    pre = Set_(segments).to_sent()
    full = s.to_sent()
    pre_nodes = generated_nodes(pre)
    pre_edges = generated_edges(pre)
    for u, v in generated_edges(full):
        if u in pre_nodes and v in pre_nodes and (u, v) not in pre_edges:
            return False
    return True
