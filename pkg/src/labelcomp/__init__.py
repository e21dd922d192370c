"""Sequence labeling with compositional label embeddings."""
from .composition import CompositionMode, compose_label_matrix, label_scores, scatter_label_gradients
from .corpus import SentenceExample, SyntheticSpec, generate_synthetic, read_conll, write_conll
from .evaluation import EvalReport, FrequencyBuckets, SpanMention, decode_spans
from .model import LabelingModel
from .schema import LabelSchema, build_schema, parse_label
from .trainer import TrainConfig, multi_seed, train

__version__ = "0.1.0"

__all__ = [
    "CompositionMode", "compose_label_matrix", "label_scores", "scatter_label_gradients",
    "SentenceExample", "SyntheticSpec", "generate_synthetic", "read_conll", "write_conll",
    "EvalReport", "FrequencyBuckets", "SpanMention", "decode_spans", "LabelingModel",
    "LabelSchema", "build_schema", "parse_label", "TrainConfig", "multi_seed", "train",
]
