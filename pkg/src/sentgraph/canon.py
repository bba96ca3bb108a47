"""Exact isomorphism testing and canonical forms.

Both operations are built on iterated color refinement. Canonical forms
use individualization-refinement search over the largest ambiguous color
class, with automorphism-based orbit pruning so that highly symmetric
graphs (cliques, cycles) stay tractable. Isomorphism uses a joint
refinement over the disjoint union followed by backtracking; a discrete
leaf is always verified edge-by-edge, so the answer never depends on the
refinement being complete.
"""

from __future__ import annotations

import struct
from typing import Sequence

from .errors import CapacityError
from .graphs import Graph, norm_edge

MAX_CANON_NODES = 512


def _edge_label_lookup(g: Graph):
    if g.edge_labels is None:
        return lambda u, v: 0
    labels = g.edge_labels
    return lambda u, v: labels[norm_edge(u, v)] + 1


def _initial_colors(g: Graph, label_space: Sequence[int] | None = None) -> list[int]:
    """Colors from node labels, ranked over a shared label space."""
    if g.node_labels is None:
        return [0] * g.n
    space = sorted(set(label_space if label_space is not None else g.node_labels))
    rank = {lab: i for i, lab in enumerate(space)}
    return [rank[lab] for lab in g.node_labels]


def _refine(adj, elab, colors: list[int]) -> list[int]:
    """Iterate signature-based splitting to the coarsest stable refinement.

    New color ids are assigned by sorted signature order, which keeps the
    numbering canonical: it depends only on the isomorphism class of the
    colored graph, never on node identity.
    """
    n = len(colors)
    ncolors = len(set(colors))
    while True:
        sigs = [
            (colors[v], tuple(sorted((colors[u], elab(u, v)) for u in adj[v])))
            for v in range(n)
        ]
        order = {sig: i for i, sig in enumerate(sorted(set(sigs)))}
        colors = [order[sig] for sig in sigs]
        if len(order) == ncolors:
            return colors
        ncolors = len(order)


def _cells(colors: list[int]) -> dict[int, list[int]]:
    cells: dict[int, list[int]] = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    return cells


def _individualize(colors: list[int], v: int) -> list[int]:
    """Split v out of its cell, keeping the canonical color numbering."""
    keyed = [(c, 0 if u == v else 1) for u, c in enumerate(colors)]
    order = {key: i for i, key in enumerate(sorted(set(keyed)))}
    return [order[key] for key in keyed]


def _individualize_pair(colors: list[int], v: int, u: int) -> list[int]:
    """Split {v, u} (same cell) out jointly so both land on one new color."""
    keyed = [(c, 0 if w in (v, u) else 1) for w, c in enumerate(colors)]
    order = {key: i for i, key in enumerate(sorted(set(keyed)))}
    return [order[key] for key in keyed]


def _target_cell(cells: dict[int, list[int]]) -> list[int] | None:
    """Largest ambiguous color class; ties broken by smallest color id."""
    best = None
    best_key = None
    for color in sorted(cells):
        members = cells[color]
        if len(members) < 2:
            continue
        key = (-len(members), color)
        if best_key is None or key < best_key:
            best_key = key
            best = members
    return best


def _certificate(g: Graph, order: list[int]) -> bytes:
    """Byte string determined by the graph viewed through the node order."""
    n = g.n
    pos = {v: i for i, v in enumerate(order)}
    bits = bytearray((n * (n - 1) // 2 + 7) // 8)
    edge_entries = []
    elab = g.edge_labels
    for u, v in g.edges:
        i, j = pos[u], pos[v]
        if i > j:
            i, j = j, i
        k = i * (2 * n - i - 1) // 2 + (j - i - 1)
        bits[k >> 3] |= 1 << (k & 7)
        if elab is not None:
            edge_entries.append((i, j, elab[norm_edge(u, v)]))
    out = bytearray()
    out += struct.pack(">I", n)
    out += bytes(bits)
    if g.node_labels is not None:
        out += b"N" + b"".join(struct.pack(">I", g.node_labels[v]) for v in order)
    if elab is not None:
        out += b"E"
        for i, j, lab in sorted(edge_entries):
            out += struct.pack(">III", i, j, lab)
    return bytes(out)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def canonical_form(g: Graph, max_nodes: int = MAX_CANON_NODES) -> bytes:
    """Canonical byte string: equal outputs iff the graphs are isomorphic.

    Individualization-refinement search. At each tree node we branch over
    every vertex of the target cell, pruning vertices that a discovered
    automorphism (fixing the current branching path pointwise) maps onto an
    already-explored sibling. The certificate is the minimum over leaves.
    """
    if g.n > max_nodes:
        raise CapacityError(f"canonical_form size cap {max_nodes} exceeded (n={g.n})")
    if g.n == 0:
        return b"\x00empty"
    adj = g.adj
    elab = _edge_label_lookup(g)

    best: dict[str, object] = {"cert": None, "first_order": None, "first_cert": None}
    autos: list[list[int]] = []

    def record_leaf(colors: list[int]):
        order = sorted(range(g.n), key=lambda v: colors[v])
        cert = _certificate(g, order)
        if best["first_cert"] is None:
            best["first_cert"] = cert
            best["first_order"] = order
        elif cert == best["first_cert"]:
            first = best["first_order"]
            sigma = [0] * g.n
            for i in range(g.n):
                sigma[first[i]] = order[i]
            autos.append(sigma)
        if best["cert"] is None or cert < best["cert"]:
            best["cert"] = cert

    def orbit_partition(path: list[int]) -> _UnionFind:
        uf = _UnionFind(g.n)
        fixed = set(path)
        for sigma in autos:
            if all(sigma[p] == p for p in fixed):
                for v in range(g.n):
                    uf.union(v, sigma[v])
        return uf

    def search(colors: list[int], path: list[int]):
        colors = _refine(adj, elab, colors)
        cell = _target_cell(_cells(colors))
        if cell is None:
            record_leaf(colors)
            return
        explored: list[int] = []
        for v in sorted(cell):
            if explored:
                uf = orbit_partition(path)
                if any(uf.find(v) == uf.find(w) for w in explored):
                    continue
            search(_individualize(colors, v), path + [v])
            explored.append(v)

    search(_initial_colors(g), [])
    return best["cert"]  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Isomorphism
# ---------------------------------------------------------------------------


def _verify_mapping(g: Graph, h: Graph, sigma: list[int]) -> bool:
    """Check that sigma (g-node -> h-node) preserves structure and labels."""
    if sorted(sigma) != list(range(h.n)):
        return False
    for u, v in g.edges:
        if not h.has_edge(sigma[u], sigma[v]):
            return False
    if len(g.edges) != len(h.edges):
        return False
    if (g.node_labels is None) != (h.node_labels is None):
        return False
    if g.node_labels is not None:
        for v in range(g.n):
            if g.node_labels[v] != h.node_labels[sigma[v]]:
                return False
    if (g.edge_labels is None) != (h.edge_labels is None):
        return False
    if g.edge_labels is not None:
        for (u, v), lab in g.edge_labels.items():
            if h.edge_labels[norm_edge(sigma[u], sigma[v])] != lab:
                return False
    return True


def are_isomorphic(g: Graph, h: Graph) -> bool:
    """True iff a label-preserving, adjacency-preserving bijection exists."""
    if g.n != h.n or len(g.edges) != len(h.edges):
        return False
    if sorted(len(a) for a in g.adj) != sorted(len(a) for a in h.adj):
        return False
    if (g.node_labels is None) != (h.node_labels is None):
        return False
    if g.node_labels is not None and sorted(g.node_labels) != sorted(h.node_labels):
        return False
    if (g.edge_labels is None) != (h.edge_labels is None):
        return False
    if g.edge_labels is not None and sorted(g.edge_labels.values()) != sorted(
        h.edge_labels.values()
    ):
        return False
    n = g.n
    if n == 0:
        return True

    # Joint refinement over the disjoint union: shared signature space, so
    # matching cells get matching colors on both sides.
    adj = list(g.adj) + [tuple(u + n for u in nbrs) for nbrs in h.adj]
    g_elab = _edge_label_lookup(g)
    h_elab = _edge_label_lookup(h)

    def elab(u: int, v: int) -> int:
        if u < n:
            return g_elab(u, v)
        return h_elab(u - n, v - n)

    label_space = None
    if g.node_labels is not None:
        label_space = sorted(set(g.node_labels) | set(h.node_labels))
    colors0 = _initial_colors(g, label_space) + _initial_colors(h, label_space)

    def side_hists(colors: list[int]):
        hist_g: dict[int, int] = {}
        hist_h: dict[int, int] = {}
        for v in range(n):
            hist_g[colors[v]] = hist_g.get(colors[v], 0) + 1
        for v in range(n, 2 * n):
            hist_h[colors[v]] = hist_h.get(colors[v], 0) + 1
        return hist_g, hist_h

    def match(colors: list[int]) -> bool:
        colors = _refine(adj, elab, colors)
        hist_g, hist_h = side_hists(colors)
        if hist_g != hist_h:
            return False
        ambiguous = [c for c, cnt in hist_g.items() if cnt > 1]
        if not ambiguous:
            by_color = {colors[v]: v for v in range(n)}
            sigma = [0] * n
            for v in range(n, 2 * n):
                sigma[by_color[colors[v]]] = v - n
            return _verify_mapping(g, h, sigma)
        c = min(
            ambiguous,
            key=lambda col: (hist_g[col], col),
        )
        v = min(u for u in range(n) if colors[u] == c)
        for u in range(n, 2 * n):
            if colors[u] != c:
                continue
            if match(_individualize_pair(colors, v, u)):
                return True
        return False

    return match(colors0)
