"""Tokenization of SENTs/SETs and the inverse parsing back to graphs.

tokenize . reindex . sample_sent is the encoding pipeline; detokenize is
its exact inverse on reindexed SENTs (labels included). Parsing is driven
by the grammar automaton, so strict detokenization accepts exactly the
sequences that constrained decoding can emit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grammar
from .errors import CapacityError, ContractViolation, InputError, ParseError
from .graphs import Graph, norm_edge
from .trails import (
    NbTuple,
    Sent,
    Set_,
    is_reindexed,
    reconstruct,
    reconstruct_set,
    reindex,
    reindex_map,
    reindex_set,
    sample_sent,
    sample_set,
    sent_node_order,
)
from .vocab import BOS, BREAK, CLOSE, EOS, OPEN, TokenSeq, Vocab


def sent_token_length(n: int, m: int, k: int, attributed: bool = False) -> int:
    """Content-token count of a tokenized SENT (excluding BOS/EOS)."""
    if attributed:
        return 3 * n + 2 * m + 2 * k - 1
    return 2 * n + m + 2 * k - 1


def tokenize(
    s: Sent,
    v: Vocab,
    attributed: bool = False,
    node_labels: dict[int, int] | None = None,
    edge_labels: dict[tuple[int, int], int] | None = None,
) -> TokenSeq:
    """Tokenize a reindexed SENT; label maps are keyed by reindexed node ids.

    Unattributed tuple layout: [v, <, u1..up, >], segments joined by '/'.
    Attributed: [v, L_node(v), <, L_edge(v,u1), u1, .., >] with the trail-edge
    label emitted between consecutive tuples of a segment.
    """
    if s.tuple_count() == 0:
        raise InputError("cannot tokenize an empty SENT")
    if not is_reindexed(s):
        raise ContractViolation("tokenize requires a reindexed Hamiltonian SENT")
    n = s.tuple_count()
    if n > v.max_nodes:
        raise CapacityError(f"SENT names {n} nodes, vocab caps at {v.max_nodes}")
    if attributed:
        if v.node_label_count == 0 or v.edge_label_count == 0:
            raise InputError("attributed tokenization needs node and edge label vocab")
        if node_labels is None or edge_labels is None:
            raise InputError("attributed tokenization needs label maps")
        edge_labels = {norm_edge(a, b): lab for (a, b), lab in edge_labels.items()}

    def elab(a: int, b: int) -> int:
        try:
            return edge_labels[norm_edge(a, b)]
        except KeyError:
            raise InputError(f"missing edge label for ({a},{b})") from None

    out = [BOS]
    for si, seg in enumerate(s.segments):
        if si > 0:
            out.append(BREAK)
        prev = None
        for t in seg:
            if attributed and prev is not None:
                out.append(v.edge_label_token(elab(prev, t.node)))
            out.append(v.node_token(t.node))
            if attributed:
                try:
                    out.append(v.node_label_token(node_labels[t.node]))
                except KeyError:
                    raise InputError(f"missing node label for {t.node}") from None
            out.append(OPEN)
            for u in t.nbset:
                if attributed:
                    out.append(v.edge_label_token(elab(t.node, u)))
                out.append(v.node_token(u))
            out.append(CLOSE)
            prev = t.node
    out.append(EOS)
    return TokenSeq(tuple(out), v.key)


@dataclass
class DecodedSent:
    sent: Sent
    node_labels: dict[int, int] | None = None
    edge_labels: dict[tuple[int, int], int] | None = None
    truncated: bool = False
    dropped_tokens: int = 0


def _parse_validated(tokens: list[int], v: Vocab, attributed: bool) -> DecodedSent:
    """Structural parse of a token list already accepted by the automaton."""
    segments: list[list[NbTuple]] = []
    seg: list[NbTuple] = []
    node_labels: dict[int, int] = {}
    edge_labels: dict[tuple[int, int], int] = {}
    pending_elabel: int | None = None
    prev_head: int | None = None
    cur_node = 0
    cur_nbset: list[int] = []
    in_nbset = False
    for tok in tokens:
        if tok in (BOS, EOS):
            continue
        if tok == BREAK:
            segments.append(seg)
            seg = []
            prev_head = None
        elif tok == OPEN:
            in_nbset = True
            cur_nbset = []
        elif tok == CLOSE:
            in_nbset = False
            seg.append(NbTuple(cur_node, tuple(cur_nbset)))
            prev_head = cur_node
        elif v.is_node(tok):
            idx = v.node_index(tok)
            if in_nbset:
                cur_nbset.append(idx)
                if pending_elabel is not None:
                    edge_labels[norm_edge(cur_node, idx)] = pending_elabel
                    pending_elabel = None
            else:
                cur_node = idx
                if pending_elabel is not None and prev_head is not None:
                    edge_labels[norm_edge(prev_head, idx)] = pending_elabel
                    pending_elabel = None
        elif v.is_node_label(tok):
            node_labels[cur_node] = v.node_label_value(tok)
        elif v.is_edge_label(tok):
            pending_elabel = v.edge_label_value(tok)
        else:
            raise ParseError(f"unclassifiable token {tok}", 0, "E_BAD_TOKEN")
    if seg:
        segments.append(seg)
    sent = Sent(segments)
    if attributed:
        return DecodedSent(sent, node_labels, edge_labels)
    return DecodedSent(sent)


def detokenize(t: TokenSeq | list[int], v: Vocab, attributed: bool = False) -> DecodedSent:
    """Strict inverse of tokenize: any grammar or causality violation raises
    ParseError with the token position and rule code."""
    tokens = [int(x) for x in (t.tokens if isinstance(t, TokenSeq) else t)]
    st = grammar.replay(tokens, v, attributed)
    if not st.done:
        raise ParseError("sequence ended before EOS", st.pos, "E_TRUNCATED")
    decoded = _parse_validated(tokens, v, attributed)
    if decoded.sent.tuple_count() == 0:
        raise ParseError("empty SENT does not describe a graph", 1, "E_EMPTY")
    return decoded


def detokenize_lenient(tokens, v: Vocab, attributed: bool = False) -> DecodedSent:
    """Best-effort parse of model output: on the first violation (or missing
    EOS) drop the offending suffix and keep the longest prefix that ends at a
    completed tuple. Raises only when no complete tuple exists."""
    toks = [int(x) for x in (tokens.tokens if isinstance(tokens, TokenSeq) else tokens)]
    st = grammar.initial_state(attributed)
    safe_len = 0  # prefix length after which EOS would be legal
    consumed = 0
    done = False
    for tok in toks:
        try:
            st = grammar.step(st, tok, v)
        except ParseError:
            break
        consumed += 1
        if st.done:
            done = True
            break
        if st.mode is grammar.Mode.AFTER_NB_CLOSE:
            safe_len = consumed
    if done:
        decoded = _parse_validated(toks[:consumed], v, attributed)
        decoded.truncated = False
        decoded.dropped_tokens = len(toks) - consumed
        return decoded
    if safe_len == 0:
        raise ParseError("no complete tuple to salvage", consumed, "E_UNSALVAGEABLE")
    decoded = _parse_validated(toks[:safe_len] + [EOS], v, attributed)
    decoded.truncated = True
    decoded.dropped_tokens = len(toks) - safe_len
    return decoded


# ---------------------------------------------------------------------------
# Whole-graph pipelines
# ---------------------------------------------------------------------------


@dataclass
class EncodedGraph:
    tokens: TokenSeq
    sent: Sent               # reindexed
    mapping: dict[int, int]  # original node id -> 1-based reindexed id


def encode_graph(
    g: Graph, v: Vocab, rng: np.random.Generator, attributed: bool = False
) -> EncodedGraph:
    """Sample, reindex and tokenize one SENT of g."""
    raw = sample_sent(g, rng)
    mapping = reindex_map(raw)
    s = reindex(raw)
    node_labels = None
    edge_labels = None
    if attributed:
        if g.node_labels is None or g.edge_labels is None:
            raise InputError("attributed encoding needs a labelled graph")
        node_labels = {mapping[v_]: lab for v_, lab in enumerate(g.node_labels)}
        edge_labels = {
            norm_edge(mapping[a], mapping[b]): lab for (a, b), lab in g.edge_labels.items()
        }
    toks = tokenize(s, v, attributed, node_labels, edge_labels)
    return EncodedGraph(toks, s, mapping)


def decode_graph(
    tokens: TokenSeq | list[int], v: Vocab, attributed: bool = False, strict: bool = True
) -> tuple[Graph, DecodedSent]:
    """Parse tokens and reconstruct the generated graph (dense node ids)."""
    if strict:
        decoded = detokenize(tokens, v, attributed)
    else:
        decoded = detokenize_lenient(tokens, v, attributed)
    g = reconstruct(decoded.sent)
    if attributed and decoded.node_labels is not None:
        order = sent_node_order(decoded.sent)
        dense = {vid: i for i, vid in enumerate(order)}
        nl = [decoded.node_labels.get(vid, 0) for vid in order]
        el = {
            norm_edge(dense[a], dense[b]): lab
            for (a, b), lab in (decoded.edge_labels or {}).items()
        }
        g = Graph.make(g.n, g.edges, nl, el)
    return g, decoded


# --- SET (ablation) --------------------------------------------------------


def tokenize_set(s: Set_, v: Vocab) -> TokenSeq:
    """SET layout: plain node tokens with '/' between segments (no '<'/'>')."""
    if not s.segments:
        raise InputError("cannot tokenize an empty SET")
    rs = reindex_set(s)
    hi = max(rs.flatten())
    if hi > v.max_nodes:
        raise CapacityError(f"SET names {hi} nodes, vocab caps at {v.max_nodes}")
    out = [BOS]
    for si, seg in enumerate(rs.segments):
        if si > 0:
            out.append(BREAK)
        out.extend(v.node_token(i) for i in seg)
    out.append(EOS)
    return TokenSeq(tuple(out), v.key)


def detokenize_set(tokens, v: Vocab, lenient: bool = False) -> tuple[Set_, bool]:
    """Parse a SET token stream; lenient mode keeps the longest valid prefix."""
    toks = [int(x) for x in (tokens.tokens if isinstance(tokens, TokenSeq) else tokens)]
    st = grammar.set_initial_state()
    segments: list[list[int]] = []
    seg: list[int] = []
    truncated = False
    done = False
    for tok in toks:
        try:
            st = grammar.set_step(st, tok, v)
        except ParseError:
            if not lenient:
                raise
            truncated = True
            break
        if tok == BOS:
            continue
        if tok == EOS:
            done = True
            break
        if tok == BREAK:
            if seg:
                segments.append(seg)
                seg = []
            continue
        seg.append(v.node_index(tok))
    if not done:
        if not lenient:
            raise ParseError("sequence ended before EOS", st.pos, "E_TRUNCATED")
        truncated = True
    if seg:
        segments.append(seg)
    if not segments:
        raise ParseError("no usable SET segment", st.pos, "E_UNSALVAGEABLE")
    return Set_(segments), truncated


def encode_graph_set(g: Graph, v: Vocab, rng: np.random.Generator) -> TokenSeq:
    return tokenize_set(sample_set(g, rng), v)


def decode_graph_set(tokens, v: Vocab, strict: bool = True) -> tuple[Graph, bool]:
    s, truncated = detokenize_set(tokens, v, lenient=not strict)
    return reconstruct_set(s), truncated
