from .base import ModelInterface, TrainConfig
from .checkpoint import load_model, save_model
from .ngram import NGramModel
from .sampling import SampleResult, sample_tokens
from .training import TrainResult, evaluate_nll, train
from .transformer import TinyTransformer, TransformerConfig
from .uniform import UniformModel

__all__ = [
    "ModelInterface",
    "NGramModel",
    "SampleResult",
    "TinyTransformer",
    "TrainConfig",
    "TrainResult",
    "TransformerConfig",
    "UniformModel",
    "evaluate_nll",
    "load_model",
    "sample_tokens",
    "save_model",
    "train",
]
