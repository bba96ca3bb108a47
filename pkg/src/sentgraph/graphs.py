"""Undirected attributed graphs and the structural descriptors used by
the evaluation suite.

Nodes are dense 0-based indices. External files may use arbitrary ids;
they are remapped on ingestion (see io.py). Labels are optional
categorical ids; when present node_labels covers every node and
edge_labels covers every edge.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

DEGREE_CAP = 128
CLUSTERING_BINS = 100
SPECTRUM_BINS = 200


def norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(eq=False)
class Graph:
    """Undirected graph: no self-loops, no parallel edges.

    Treated as immutable after construction; all operations on it are pure.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    node_labels: tuple[int, ...] | None = None
    edge_labels: dict[tuple[int, int], int] | None = None
    graph_id: str = ""

    @staticmethod
    def make(
        n: int,
        edges: Iterable[tuple[int, int]],
        node_labels: Sequence[int] | None = None,
        edge_labels: dict[tuple[int, int], int] | None = None,
        graph_id: str = "",
    ) -> "Graph":
        if n < 0:
            raise InputError(f"negative node count {n}")
        norm = set()
        for u, v in edges:
            if u == v:
                raise InputError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u},{v}) out of range for n={n}")
            norm.add(norm_edge(u, v))
        nl = tuple(node_labels) if node_labels is not None else None
        if nl is not None and len(nl) != n:
            raise InputError(f"node_labels has {len(nl)} entries, expected {n}")
        el = None
        if edge_labels is not None:
            el = {norm_edge(u, v): lab for (u, v), lab in edge_labels.items()}
            if set(el) != norm:
                raise InputError("edge_labels does not cover the edge set exactly")
        return Graph(n, frozenset(norm), nl, el, graph_id)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adj(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            out[u].append(v)
            out[v].append(u)
        return tuple(tuple(sorted(a)) for a in out)

    @cached_property
    def adj_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(a) for a in self.adj)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return norm_edge(u, v) in self.edges

    def same_as(self, other: "Graph") -> bool:
        """Structural equality including labels (not isomorphism)."""
        return (
            self.n == other.n
            and self.edges == other.edges
            and self.node_labels == other.node_labels
            and self.edge_labels == other.edge_labels
        )


def neighbors(g: Graph, v: int) -> set[int]:
    """Neighbor set of v."""
    if not (0 <= v < g.n):
        raise InputError(f"node {v} out of range for n={g.n}")
    return set(g.adj[v])


def permute(g: Graph, sigma: Sequence[int]) -> Graph:
    """Relabel nodes by the permutation sigma (old index -> new index)."""
    if sorted(sigma) != list(range(g.n)):
        raise InputError("sigma is not a permutation of 0..n-1")
    edges = {norm_edge(sigma[u], sigma[v]) for u, v in g.edges}
    nl = None
    if g.node_labels is not None:
        nl = [0] * g.n
        for old, lab in enumerate(g.node_labels):
            nl[sigma[old]] = lab
    el = None
    if g.edge_labels is not None:
        el = {norm_edge(sigma[u], sigma[v]): lab for (u, v), lab in g.edge_labels.items()}
    return Graph.make(g.n, edges, nl, el, g.graph_id)


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in g.adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    """Induced subgraph on the given nodes, remapped to 0..k-1 in list order."""
    pos = {v: i for i, v in enumerate(nodes)}
    if len(pos) != len(nodes):
        raise InputError("duplicate nodes in induced_subgraph")
    edges = [
        (pos[u], pos[v]) for u, v in g.edges if u in pos and v in pos
    ]
    return Graph.make(len(nodes), edges)


# ---------------------------------------------------------------------------
# Structural descriptors (degree / clustering / orbit / spectrum)
# ---------------------------------------------------------------------------


@dataclass
class GraphDescriptors:
    """One vector per descriptor family, fixed-length across a sample set."""

    degree: np.ndarray
    clustering: np.ndarray
    orbit: np.ndarray
    spectrum: np.ndarray
    graph_id: str = ""


def degree_histogram(g: Graph, cap: int = DEGREE_CAP) -> np.ndarray:
    """Normalized histogram over degree values 0..cap (overshoot clamps)."""
    h = np.zeros(cap + 1)
    for v in range(g.n):
        h[min(g.degree(v), cap)] += 1.0
    if g.n > 0:
        h /= g.n
    return h


def clustering_coefficients(g: Graph) -> np.ndarray:
    coeffs = np.zeros(g.n)
    for v in range(g.n):
        d = g.degree(v)
        if d < 2:
            continue
        nb = g.adj[v]
        tri = 0
        for i, u in enumerate(nb):
            au = g.adj_sets[u]
            for w in nb[i + 1 :]:
                if w in au:
                    tri += 1
        coeffs[v] = 2.0 * tri / (d * (d - 1))
    return coeffs


def clustering_histogram(g: Graph, bins: int = CLUSTERING_BINS) -> np.ndarray:
    h, _ = np.histogram(clustering_coefficients(g), bins=bins, range=(0.0, 1.0))
    h = h.astype(float)
    if g.n > 0:
        h /= g.n
    return h


def normalized_laplacian(g: Graph) -> np.ndarray:
    """Symmetric normalized Laplacian; isolated nodes contribute a zero row."""
    a = np.zeros((g.n, g.n))
    for u, v in g.edges:
        a[u, v] = a[v, u] = 1.0
    deg = a.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    lap = -a * np.outer(inv_sqrt, inv_sqrt)
    np.fill_diagonal(lap, np.where(deg > 0, 1.0, 0.0))
    return lap


def eigen_spectrum(g: Graph) -> np.ndarray:
    """Ascending eigenvalues of the normalized Laplacian, floored at 0."""
    if g.n < 1:
        raise InputError("eigen_spectrum requires at least one node")
    vals = np.linalg.eigvalsh(normalized_laplacian(g))
    return np.maximum(vals, 0.0)


def spectrum_histogram(g: Graph, bins: int = SPECTRUM_BINS) -> np.ndarray:
    # rounding keeps eigenvalues that sit on a bin edge (0, 1, 2, ...) from
    # flipping bins under the solver's permutation-dependent jitter
    vals = np.round(np.clip(eigen_spectrum(g), 0.0, 2.0), 9)
    h, _ = np.histogram(vals, bins=bins, range=(0.0, 2.0))
    h = h.astype(float)
    if g.n > 0:
        h /= g.n
    return h


# Connected 4-node graphlet orbits, identified by (induced edge count, degree
# inside the graphlet). Eleven orbits total:
#   path: end, middle            star: leaf, center
#   cycle: all                   paw: pendant, triangle-rim, apex
#   diamond: rim, hub            clique: all
_ORBIT_BY_SHAPE = {
    (3, 1, True): 0,   # path end (degree 1 and its neighbor has degree 2)
    (3, 2, True): 1,   # path middle
    (3, 1, False): 2,  # star leaf
    (3, 3, False): 3,  # star center
    (4, 2, True): 4,   # cycle
    (4, 1, False): 5,  # paw pendant
    (4, 2, False): 6,  # paw triangle rim
    (4, 3, False): 7,  # paw apex
    (5, 2, False): 8,  # diamond rim
    (5, 3, False): 9,  # diamond hub
    (6, 3, False): 10, # clique
}
ORBIT_COUNT = 11


def _classify_quad(degs: list[int], ecount: int) -> list[int]:
    """Orbit id for each of the four nodes of a connected induced quad."""
    if ecount == 3:
        path_like = max(degs) == 2  # path has degrees 1,1,2,2; star 1,1,1,3
        return [_ORBIT_BY_SHAPE[(3, d, path_like)] for d in degs]
    if ecount == 4:
        cycle = max(degs) == 2
        return [_ORBIT_BY_SHAPE[(4, d, cycle)] for d in degs]
    if ecount == 5:
        return [_ORBIT_BY_SHAPE[(5, d, False)] for d in degs]
    return [_ORBIT_BY_SHAPE[(6, d, False)] for d in degs]


def _connected_quads(g: Graph):
    """ESU enumeration: each connected induced 4-node subgraph exactly once."""
    adj = g.adj_sets

    def extend(sub: list[int], ext: set[int], root: int, closed: set[int]):
        if len(sub) == 3:
            for w in ext:
                yield (*sub, w)
            return
        ext = sorted(ext)
        remaining = set(ext)
        for w in ext:
            remaining.discard(w)
            grown = {u for u in adj[w] if u > root and u not in closed}
            new_closed = closed | grown | {w}
            yield from extend(sub + [w], remaining | grown, root, new_closed)

    for v in range(g.n):
        ext0 = {u for u in adj[v] if u > v}
        yield from extend([v], ext0, v, ext0 | {v})


def orbit_counts(g: Graph) -> np.ndarray:
    """Per-node counts of the 11 connected 4-node graphlet orbits, shape (n, 11)."""
    counts = np.zeros((g.n, ORBIT_COUNT))
    for quad in _connected_quads(g):
        qset = set(quad)
        degs = [sum(1 for u in qset if u != v and g.has_edge(u, v)) for v in quad]
        ecount = sum(degs) // 2
        for v, orb in zip(quad, _classify_quad(degs, ecount)):
            counts[v, orb] += 1.0
    return counts


def orbit_mean_vector(g: Graph) -> np.ndarray:
    oc = orbit_counts(g)
    if g.n == 0:
        return np.zeros(ORBIT_COUNT)
    return oc.mean(axis=0)


def descriptors(
    g: Graph,
    graph_id: str | None = None,
    degree_cap: int = DEGREE_CAP,
    clustering_bins: int = CLUSTERING_BINS,
    spectrum_bins: int = SPECTRUM_BINS,
) -> GraphDescriptors:
    """Degree / clustering / orbit / spectrum descriptors of one graph."""
    if g.n < 1:
        raise InputError("descriptors requires at least one node")
    return GraphDescriptors(
        degree=degree_histogram(g, degree_cap),
        clustering=clustering_histogram(g, clustering_bins),
        orbit=orbit_mean_vector(g),
        spectrum=spectrum_histogram(g, spectrum_bins),
        graph_id=g.graph_id if graph_id is None else graph_id,
    )


def triangle_graph() -> Graph:
    return Graph.make(3, [(0, 1), (1, 2), (0, 2)])


def path_graph(n: int) -> Graph:
    return Graph.make(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    edges = [(i, (i + 1) % n) for i in range(n)]
    return Graph.make(n, edges)


def complete_graph(n: int) -> Graph:
    return Graph.make(n, itertools.combinations(range(n), 2))


def star_graph(leaves: int) -> Graph:
    return Graph.make(leaves + 1, [(0, i) for i in range(1, leaves + 1)])
