"""Graph container file formats.

Two formats are accepted:

1. Line-oriented text, one or many graphs per file:
       # graph <id>
       n <count>
       v <idx> <label-id>        (optional)
       e <u> <v> [<label-id>]
   External files may use arbitrary node ids; they are remapped to dense
   0-based indices (sorted by original id) on ingestion.

2. JSON lines: one document per line with fields
       {"n": .., "edges": [[u,v],..], "node_labels": [..]|null,
        "edge_labels": [..]|null, "id": ..}
   where edge_labels aligns with the edges list.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .errors import InputError
from .graphs import Graph, norm_edge


def write_glist(path: str | Path, graphs: Iterable[Graph]):
    lines: list[str] = []
    for i, g in enumerate(graphs):
        gid = g.graph_id or str(i)
        lines.append(f"# graph {gid}")
        lines.append(f"n {g.n}")
        if g.node_labels is not None:
            for v, lab in enumerate(g.node_labels):
                lines.append(f"v {v} {lab}")
        for u, v in sorted(g.edges):
            if g.edge_labels is not None:
                lines.append(f"e {u} {v} {g.edge_labels[(u, v)]}")
            else:
                lines.append(f"e {u} {v}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def _finish_graph(gid, n, vlines, elines) -> Graph:
    ids = sorted({u for u, _, _ in elines} | {v for _, v, _ in elines} | {v for v, _ in vlines})
    if n is None:
        n = len(ids)
    if ids and (min(ids) < 0 or max(ids) >= n):
        remap = {old: i for i, old in enumerate(ids)}
        n = len(ids)
    elif len(ids) > n:
        raise InputError(f"graph {gid}: {len(ids)} distinct ids exceed n={n}")
    else:
        remap = {i: i for i in ids}
    node_labels = None
    if vlines:
        node_labels = [0] * n
        for v, lab in vlines:
            node_labels[remap[v]] = lab
    edges = []
    edge_labels = {}
    labelled = False
    for u, v, lab in elines:
        e = norm_edge(remap[u], remap[v])
        edges.append(e)
        if lab is not None:
            labelled = True
            edge_labels[e] = lab
    return Graph.make(
        n,
        edges,
        node_labels,
        edge_labels if labelled else None,
        graph_id=str(gid),
    )


def read_glist(path: str | Path) -> list[Graph]:
    graphs: list[Graph] = []
    gid = None
    n = None
    vlines: list[tuple[int, int]] = []
    elines: list[tuple[int, int, int | None]] = []
    started = False

    def flush():
        nonlocal started, gid, n, vlines, elines
        if started:
            graphs.append(_finish_graph(gid, n, vlines, elines))
        gid, n, vlines, elines = None, None, [], []
        started = False

    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "#":
            flush()
            started = True
            gid = parts[2] if len(parts) > 2 else str(len(graphs))
        elif parts[0] == "n":
            started = True
            n = int(parts[1])
        elif parts[0] == "v":
            started = True
            vlines.append((int(parts[1]), int(parts[2])))
        elif parts[0] == "e":
            started = True
            lab = int(parts[3]) if len(parts) > 3 else None
            elines.append((int(parts[1]), int(parts[2]), lab))
        else:
            raise InputError(f"{path}:{lineno}: unrecognized line {raw!r}")
    flush()
    return graphs


def write_jsonl(path: str | Path, graphs: Iterable[Graph]):
    with Path(path).open("w") as fh:
        for i, g in enumerate(graphs):
            edges = sorted(g.edges)
            doc = {
                "id": g.graph_id or str(i),
                "n": g.n,
                "edges": [list(e) for e in edges],
                "node_labels": list(g.node_labels) if g.node_labels is not None else None,
                "edge_labels": [g.edge_labels[e] for e in edges]
                if g.edge_labels is not None
                else None,
            }
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> list[Graph]:
    graphs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{lineno}: bad JSON: {exc}") from exc
        edges = [tuple(e) for e in doc["edges"]]
        edge_labels = None
        if doc.get("edge_labels") is not None:
            edge_labels = {norm_edge(*e): lab for e, lab in zip(edges, doc["edge_labels"])}
        graphs.append(
            Graph.make(
                doc["n"],
                edges,
                doc.get("node_labels"),
                edge_labels,
                graph_id=str(doc.get("id", lineno - 1)),
            )
        )
    return graphs


def read_graphs(path: str | Path) -> list[Graph]:
    """Format sniff: JSON lines when the first nonblank char is '{'."""
    text = Path(path).read_text()
    for ch in text:
        if ch.isspace():
            continue
        if ch == "{":
            return read_jsonl(path)
        break
    return read_glist(path)
