"""Multi-stream video emotion recognition toolkit: body and context RGB
streams, an optical-flow stream, a word-embedding projection loss, and the
Emotion Recognition Score evaluation."""

from .config import RunConfig
from .data import Dataset, InstanceAnnotation, binarize_targets, parse_annotations
from .metrics import MetricsReport, compute_ers, evaluate
from .model import EmotionNet, PredictionSet, consensus, forward_snippet
from .taxonomy import EmotionTaxonomy, load_taxonomy, mean_positive_embedding, pca_project

__all__ = [
    "RunConfig", "Dataset", "InstanceAnnotation", "binarize_targets",
    "parse_annotations", "MetricsReport", "compute_ers", "evaluate",
    "EmotionNet", "PredictionSet", "consensus", "forward_snippet",
    "EmotionTaxonomy", "load_taxonomy", "mean_positive_embedding", "pca_project",
]

__version__ = "0.1.0"
