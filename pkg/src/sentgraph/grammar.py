"""Incremental decoding automaton: which tokens may legally follow a prefix.

The automaton accepts exactly the tokenizations of reindexed causal
Hamiltonian SENTs (plus attribute interleaving when enabled). Because the
reindexing names nodes by first occurrence and every tuple head is fresh
under the Hamiltonian constraint, the only legal head token is always
max_node_used + 1; neighborhood members must be previously named nodes,
strictly ascending within the set, and must not duplicate an edge.

States are values; step() returns a new state, so any number of decoding
streams can run in parallel.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import GrammarViolation
from .vocab import BOS, BREAK, CLOSE, EOS, OPEN, Vocab


class Mode(enum.Enum):
    EXPECT_NODE = "ExpectNode"
    EXPECT_NODE_LABEL = "ExpectNodeLabel"
    EXPECT_NB_OPEN = "ExpectNbOpen"
    IN_NBSET = "InNbSet"
    EXPECT_NB_EDGE_LABEL = "ExpectNbEdgeLabel"
    EXPECT_NB_NODE = "ExpectNbNode"
    AFTER_NB_CLOSE = "AfterNbClose"
    DONE = "Done"


@dataclass(frozen=True)
class DecoderState:
    attributed: bool
    mode: Mode = Mode.EXPECT_NODE
    bos_seen: bool = False
    pos: int = 0
    max_node_used: int = 0
    current_node: int = 0
    nbset_last: int = 0
    pending_trail: bool = False
    used_edges: frozenset[tuple[int, int]] = frozenset()  # normalized (lo, hi) pairs

    @property
    def visited(self) -> set[int]:
        return set(range(1, self.max_node_used + 1))

    @property
    def done(self) -> bool:
        return self.mode is Mode.DONE


def initial_state(attributed: bool = False) -> DecoderState:
    return DecoderState(attributed=attributed)


def _legal_members(st: DecoderState) -> list[int]:
    """Nbset candidates: visited, above the ascending cursor, not the current
    head, and not already adjacent to it."""
    out = []
    cur = st.current_node
    used = st.used_edges
    for u in range(st.nbset_last + 1, st.max_node_used):
        if ((u, cur) if u < cur else (cur, u)) not in used:
            out.append(u)
    return out


def legal_next(st: DecoderState, v: Vocab) -> frozenset[int]:
    """Exact set of tokens preserving parseability; never empty before Done."""
    if st.done:
        return frozenset()
    if not st.bos_seen:
        return frozenset({BOS})
    can_grow = st.max_node_used < v.max_nodes
    mode = st.mode
    if mode is Mode.EXPECT_NODE:
        return frozenset({v.node_token(st.max_node_used + 1)}) if can_grow else frozenset()
    if mode is Mode.EXPECT_NODE_LABEL:
        return frozenset(v.node_label_token(l) for l in range(v.node_label_count))
    if mode is Mode.EXPECT_NB_OPEN:
        return frozenset({OPEN})
    if mode is Mode.IN_NBSET:
        legal = {CLOSE}
        legal.update(v.node_token(u) for u in _legal_members(st))
        return frozenset(legal)
    if mode is Mode.EXPECT_NB_EDGE_LABEL:
        legal = {CLOSE}
        if _legal_members(st):
            legal.update(v.edge_label_token(l) for l in range(v.edge_label_count))
        return frozenset(legal)
    if mode is Mode.EXPECT_NB_NODE:
        return frozenset(v.node_token(u) for u in _legal_members(st))
    if mode is Mode.AFTER_NB_CLOSE:
        legal = {EOS}
        if can_grow:
            legal.add(BREAK)
            if st.attributed:
                legal.update(v.edge_label_token(l) for l in range(v.edge_label_count))
            else:
                legal.add(v.node_token(st.max_node_used + 1))
        return frozenset(legal)
    raise AssertionError(f"unhandled mode {mode}")


def _violation(st: DecoderState, tok: int, v: Vocab) -> GrammarViolation:
    d = v.describe(tok)
    if not st.bos_seen:
        return GrammarViolation(f"expected BOS, got {d}", st.pos, "E_EXPECT_BOS")
    mode = st.mode
    if mode is Mode.DONE:
        return GrammarViolation(f"token {d} after EOS", st.pos, "E_AFTER_EOS")
    if v.is_node(tok):
        idx = v.node_index(tok)
        if mode is Mode.EXPECT_NODE or (mode is Mode.AFTER_NB_CLOSE and not st.attributed):
            if idx > v.max_nodes:
                return GrammarViolation(f"node {idx} beyond vocab cap", st.pos, "E_NODE_CAP")
            if idx <= st.max_node_used:
                return GrammarViolation(
                    f"node {idx} already used as a tuple head", st.pos, "E_REPEAT_NODE"
                )
            return GrammarViolation(
                f"node {idx} skips index {st.max_node_used + 1}", st.pos, "E_GAP_INDEX"
            )
        if mode in (Mode.IN_NBSET, Mode.EXPECT_NB_NODE):
            if idx >= st.max_node_used and idx != st.current_node:
                return GrammarViolation(
                    f"nbset member {idx} was never visited", st.pos, "E_NB_UNVISITED"
                )
            if idx == st.current_node:
                return GrammarViolation("self-loop in nbset", st.pos, "E_SELF_LOOP")
            if idx <= st.nbset_last:
                return GrammarViolation(
                    f"nbset member {idx} breaks ascending order", st.pos, "E_NB_ORDER"
                )
            return GrammarViolation(
                f"edge ({st.current_node},{idx}) already generated", st.pos, "E_DUP_EDGE"
            )
    if tok == EOS:
        return GrammarViolation("EOS is only legal after a completed tuple", st.pos, "E_EOS_POSITION")
    if tok == BREAK:
        return GrammarViolation("'/' is only legal after a completed tuple", st.pos, "E_BREAK_POSITION")
    return GrammarViolation(f"token {d} illegal in state {mode.value}", st.pos, "E_BAD_TOKEN")


def _token_is_legal(st: DecoderState, tok: int, v: Vocab) -> bool:
    """Single-token legality without materializing the legal set; must agree
    with legal_next exactly (checked by tests)."""
    if st.done:
        return False
    if not st.bos_seen:
        return tok == BOS
    can_grow = st.max_node_used < v.max_nodes
    mode = st.mode
    if mode is Mode.EXPECT_NODE:
        return can_grow and v.is_node(tok) and v.node_index(tok) == st.max_node_used + 1
    if mode is Mode.EXPECT_NODE_LABEL:
        return v.is_node_label(tok)
    if mode is Mode.EXPECT_NB_OPEN:
        return tok == OPEN
    if mode in (Mode.IN_NBSET, Mode.EXPECT_NB_NODE):
        if tok == CLOSE:
            return mode is Mode.IN_NBSET
        if not v.is_node(tok):
            return False
        u = v.node_index(tok)
        if not (st.nbset_last < u < st.max_node_used):
            return False
        cur = st.current_node
        return ((u, cur) if u < cur else (cur, u)) not in st.used_edges
    if mode is Mode.EXPECT_NB_EDGE_LABEL:
        if tok == CLOSE:
            return True
        return v.is_edge_label(tok) and bool(_legal_members(st))
    if mode is Mode.AFTER_NB_CLOSE:
        if tok == EOS:
            return True
        if tok == BREAK:
            return can_grow
        if st.attributed:
            return v.is_edge_label(tok) and can_grow
        return can_grow and v.is_node(tok) and v.node_index(tok) == st.max_node_used + 1
    return False


def step(st: DecoderState, tok: int, v: Vocab) -> DecoderState:
    """Deterministic transition. Raises GrammarViolation (with a stable rule
    code) when tok is not in legal_next(st)."""
    if not _token_is_legal(st, tok, v):
        raise _violation(st, tok, v)
    pos = st.pos + 1
    if not st.bos_seen:
        return replace(st, bos_seen=True, pos=pos)
    mode = st.mode
    if mode is Mode.EXPECT_NODE or (
        mode is Mode.AFTER_NB_CLOSE and not st.attributed and v.is_node(tok)
    ):
        idx = v.node_index(tok)
        edges = st.used_edges
        if st.pending_trail or mode is Mode.AFTER_NB_CLOSE:
            cur = st.current_node
            edges = edges | {(cur, idx) if cur < idx else (idx, cur)}
        next_mode = Mode.EXPECT_NODE_LABEL if st.attributed else Mode.EXPECT_NB_OPEN
        return replace(
            st,
            mode=next_mode,
            pos=pos,
            max_node_used=idx,
            current_node=idx,
            nbset_last=0,
            pending_trail=False,
            used_edges=edges,
        )
    if mode is Mode.EXPECT_NODE_LABEL:
        return replace(st, mode=Mode.EXPECT_NB_OPEN, pos=pos)
    if mode is Mode.EXPECT_NB_OPEN:
        nb_mode = Mode.EXPECT_NB_EDGE_LABEL if st.attributed else Mode.IN_NBSET
        return replace(st, mode=nb_mode, pos=pos, nbset_last=0)
    if mode is Mode.IN_NBSET:
        if tok == CLOSE:
            return replace(st, mode=Mode.AFTER_NB_CLOSE, pos=pos)
        u = v.node_index(tok)
        cur = st.current_node
        edges = st.used_edges | {(u, cur) if u < cur else (cur, u)}
        return replace(st, pos=pos, nbset_last=u, used_edges=edges)
    if mode is Mode.EXPECT_NB_EDGE_LABEL:
        if tok == CLOSE:
            return replace(st, mode=Mode.AFTER_NB_CLOSE, pos=pos)
        return replace(st, mode=Mode.EXPECT_NB_NODE, pos=pos)
    if mode is Mode.EXPECT_NB_NODE:
        u = v.node_index(tok)
        cur = st.current_node
        edges = st.used_edges | {(u, cur) if u < cur else (cur, u)}
        return replace(st, mode=Mode.EXPECT_NB_EDGE_LABEL, pos=pos, nbset_last=u, used_edges=edges)
    if mode is Mode.AFTER_NB_CLOSE:
        if tok == EOS:
            return replace(st, mode=Mode.DONE, pos=pos)
        if tok == BREAK:
            return replace(st, mode=Mode.EXPECT_NODE, pos=pos, pending_trail=False)
        # attributed: trail-edge label chosen, next token continues the trail
        return replace(st, mode=Mode.EXPECT_NODE, pos=pos, pending_trail=True)
    raise AssertionError(f"unhandled mode {mode}")


def replay(tokens, v: Vocab, attributed: bool = False) -> DecoderState:
    """Feed a full token sequence through the automaton."""
    st = initial_state(attributed)
    for tok in tokens:
        st = step(st, int(tok), v)
    return st


def mask_logits(st: DecoderState, logits: np.ndarray, v: Vocab) -> np.ndarray:
    """Copy of logits with every illegal entry at -inf; never all-masked."""
    if logits.shape[-1] != v.size:
        raise GrammarViolation(
            f"logits length {logits.shape[-1]} != vocab size {v.size}", st.pos, "E_VOCAB_SIZE"
        )
    legal = legal_next(st, v)
    if not legal:
        raise GrammarViolation("no legal continuation", st.pos, "E_STUCK")
    out = np.full_like(logits, -np.inf)
    idx = sorted(legal)
    out[..., idx] = logits[..., idx]
    return out


# ---------------------------------------------------------------------------
# SET-mode automaton (ablation): segments of plain node tokens.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SetDecoderState:
    """Acceptor for reindexed SET tokenizations: '/'-separated trails whose
    steps never repeat an edge. Node tokens may revisit any named node or
    introduce max_node_used + 1."""

    mode: Mode = Mode.EXPECT_NODE
    bos_seen: bool = False
    pos: int = 0
    max_node_used: int = 0
    current_node: int = 0
    in_trail: bool = False
    used_edges: frozenset[tuple[int, int]] = frozenset()

    @property
    def done(self) -> bool:
        return self.mode is Mode.DONE


def set_initial_state() -> SetDecoderState:
    return SetDecoderState()


def set_legal_next(st: SetDecoderState, v: Vocab) -> frozenset[int]:
    if st.done:
        return frozenset()
    if not st.bos_seen:
        return frozenset({BOS})
    cap = min(st.max_node_used + 1, v.max_nodes)
    if not st.in_trail:
        return frozenset(v.node_token(i) for i in range(1, cap + 1))
    legal = {EOS, BREAK}
    cur = st.current_node
    for u in range(1, cap + 1):
        if u != cur and ((u, cur) if u < cur else (cur, u)) not in st.used_edges:
            legal.add(v.node_token(u))
    return frozenset(legal)


def set_step(st: SetDecoderState, tok: int, v: Vocab) -> SetDecoderState:
    if tok not in set_legal_next(st, v):
        raise GrammarViolation(
            f"token {v.describe(tok)} illegal in SET state", st.pos, "E_SET_BAD_TOKEN"
        )
    pos = st.pos + 1
    if not st.bos_seen:
        return replace(st, bos_seen=True, pos=pos)
    if tok == EOS:
        return replace(st, mode=Mode.DONE, pos=pos)
    if tok == BREAK:
        return replace(st, pos=pos, in_trail=False)
    idx = v.node_index(tok)
    edges = st.used_edges
    if st.in_trail:
        cur = st.current_node
        edges = edges | {(cur, idx) if cur < idx else (idx, cur)}
    return replace(
        st,
        pos=pos,
        max_node_used=max(st.max_node_used, idx),
        current_node=idx,
        in_trail=True,
        used_edges=edges,
    )


def set_replay(tokens, v: Vocab) -> SetDecoderState:
    st = set_initial_state()
    for tok in tokens:
        st = set_step(st, int(tok), v)
    return st
