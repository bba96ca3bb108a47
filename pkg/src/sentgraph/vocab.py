"""Token vocabulary layout and token-corpus file I/O.

Layout (bit-exact contract):
  0 PAD, 1 BOS, 2 EOS, 3 '/', 4 '<', 5 '>',
  6 .. 6+max_nodes-1           node indices 1..max_nodes,
  then node-label tokens, then edge-label tokens.

Corpora serialize as one whitespace-separated id line per sequence, with a
sidecar header file recording the layout parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError

PAD = 0
BOS = 1
EOS = 2
BREAK = 3  # '/'
OPEN = 4   # '<'
CLOSE = 5  # '>'
_BASE = 6

_SPECIAL_NAMES = {PAD: "PAD", BOS: "BOS", EOS: "EOS", BREAK: "/", OPEN: "<", CLOSE: ">"}


@dataclass(frozen=True)
class Vocab:
    max_nodes: int
    node_label_count: int = 0
    edge_label_count: int = 0

    def __post_init__(self):
        if self.max_nodes < 1:
            raise InputError("max_nodes must be >= 1")
        if self.node_label_count < 0 or self.edge_label_count < 0:
            raise InputError("label counts must be >= 0")

    @property
    def size(self) -> int:
        return _BASE + self.max_nodes + self.node_label_count + self.edge_label_count

    @property
    def key(self) -> str:
        return f"n{self.max_nodes}:v{self.node_label_count}:e{self.edge_label_count}"

    @property
    def attributed(self) -> bool:
        return self.node_label_count > 0 and self.edge_label_count > 0

    # --- encode ---
    def node_token(self, index: int) -> int:
        if not (1 <= index <= self.max_nodes):
            raise InputError(f"node index {index} outside 1..{self.max_nodes}")
        return _BASE - 1 + index

    def node_label_token(self, label: int) -> int:
        if not (0 <= label < self.node_label_count):
            raise InputError(f"node label {label} outside vocabulary")
        return _BASE + self.max_nodes + label

    def edge_label_token(self, label: int) -> int:
        if not (0 <= label < self.edge_label_count):
            raise InputError(f"edge label {label} outside vocabulary")
        return _BASE + self.max_nodes + self.node_label_count + label

    # --- classify / decode ---
    def is_node(self, tok: int) -> bool:
        return _BASE <= tok < _BASE + self.max_nodes

    def node_index(self, tok: int) -> int:
        return tok - _BASE + 1

    def is_node_label(self, tok: int) -> bool:
        lo = _BASE + self.max_nodes
        return lo <= tok < lo + self.node_label_count

    def node_label_value(self, tok: int) -> int:
        return tok - _BASE - self.max_nodes

    def is_edge_label(self, tok: int) -> bool:
        lo = _BASE + self.max_nodes + self.node_label_count
        return lo <= tok < lo + self.edge_label_count

    def edge_label_value(self, tok: int) -> int:
        return tok - _BASE - self.max_nodes - self.node_label_count

    def describe(self, tok: int) -> str:
        if tok in _SPECIAL_NAMES:
            return _SPECIAL_NAMES[tok]
        if self.is_node(tok):
            return str(self.node_index(tok))
        if self.is_node_label(tok):
            return f"nl{self.node_label_value(tok)}"
        if self.is_edge_label(tok):
            return f"el{self.edge_label_value(tok)}"
        return f"?{tok}"


@dataclass(frozen=True)
class TokenSeq:
    """A BOS..EOS token sequence that parses under the decoding grammar."""

    tokens: tuple[int, ...]
    vocab_key: str

    def __post_init__(self):
        if len(self.tokens) < 2 or self.tokens[0] != BOS or self.tokens[-1] != EOS:
            raise InputError("TokenSeq must begin with BOS and end with EOS")

    def content(self) -> tuple[int, ...]:
        return self.tokens[1:-1]

    def __len__(self) -> int:
        return len(self.tokens)


# ---------------------------------------------------------------------------
# Corpus files
# ---------------------------------------------------------------------------


def write_token_file(path: str | Path, seqs: Iterable[Sequence[int]], vocab: Vocab):
    path = Path(path)
    with path.open("w") as fh:
        for seq in seqs:
            toks = seq.tokens if isinstance(seq, TokenSeq) else seq
            fh.write(" ".join(str(t) for t in toks) + "\n")
    write_vocab_header(path.with_suffix(path.suffix + ".vocab"), vocab)


def read_token_file(path: str | Path) -> tuple[list[list[int]], Vocab | None]:
    path = Path(path)
    seqs = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        seqs.append([int(t) for t in line.split()])
    header = path.with_suffix(path.suffix + ".vocab")
    vocab = read_vocab_header(header) if header.exists() else None
    return seqs, vocab


def write_vocab_header(path: str | Path, vocab: Vocab):
    Path(path).write_text(
        "max_nodes={}\nnode_label_count={}\nedge_label_count={}\n".format(
            vocab.max_nodes, vocab.node_label_count, vocab.edge_label_count
        )
    )


def read_vocab_header(path: str | Path) -> Vocab:
    fields: dict[str, int] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or "=" not in line:
            continue
        k, v = line.split("=", 1)
        fields[k.strip()] = int(v.strip())
    try:
        return Vocab(
            max_nodes=fields["max_nodes"],
            node_label_count=fields.get("node_label_count", 0),
            edge_label_count=fields.get("edge_label_count", 0),
        )
    except KeyError as exc:
        raise InputError(f"vocab header {path} missing field {exc}") from exc
