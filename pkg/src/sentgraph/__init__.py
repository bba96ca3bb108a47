"""Lossless graph-to-sequence codec, sequence models, and evaluation suite."""

from .canon import are_isomorphic, canonical_form
from .graphs import Graph, descriptors, eigen_spectrum, neighbors, permute
from .trails import (
    NbTuple,
    Sent,
    Set_,
    prefix_graph,
    reconstruct,
    reindex,
    sample_sent,
    sample_set,
    validate_sent,
)
from .vocab import TokenSeq, Vocab

__all__ = [
    "Graph",
    "NbTuple",
    "Sent",
    "Set_",
    "TokenSeq",
    "Vocab",
    "are_isomorphic",
    "canonical_form",
    "descriptors",
    "eigen_spectrum",
    "neighbors",
    "permute",
    "prefix_graph",
    "reconstruct",
    "reindex",
    "sample_sent",
    "sample_set",
    "validate_sent",
]

__version__ = "0.1.0"
