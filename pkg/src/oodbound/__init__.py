"""Out-of-domain utterance detection on frozen sentence embeddings.

The pipeline: learn a discriminative linear projection with a large-margin
cosine or triplet objective, place a centroid per known class, fit each
class an adaptive decision radius, then classify queries by nearest centroid
with radius-based rejection to the reserved label "__ood__".
"""
from . import boundary, cli, data, detector, errors, evaluation, metric_learning
from .boundary import BoundaryParams, ClassGeometry, RadiusFit
from .data import (
    Dataset,
    LabeledEmbedding,
    OOD_LABEL,
    SplitSpec,
    SplitResult,
    load_dataset,
    load_vectors,
    make_split,
    save_dataset,
    synth_blobs,
)
from .detector import (
    DetectorModel,
    Prediction,
    fit,
    load_model,
    predict,
    predict_batch,
    save_model,
)
from .errors import DataError, NumericError, OodboundError
from .evaluation import MetricsReport, RunConfig, confusion_and_f1, run_protocol
from .metric_learning import Projection, TrainConfig, TrainReport, gradient_check

__version__ = "0.1.0"

__all__ = [
    "BoundaryParams",
    "ClassGeometry",
    "DataError",
    "Dataset",
    "DetectorModel",
    "LabeledEmbedding",
    "MetricsReport",
    "NumericError",
    "OOD_LABEL",
    "OodboundError",
    "Prediction",
    "Projection",
    "RadiusFit",
    "RunConfig",
    "SplitResult",
    "SplitSpec",
    "TrainConfig",
    "TrainReport",
    "boundary",
    "cli",
    "confusion_and_f1",
    "data",
    "detector",
    "errors",
    "evaluation",
    "fit",
    "gradient_check",
    "load_dataset",
    "load_model",
    "load_vectors",
    "make_split",
    "metric_learning",
    "predict",
    "predict_batch",
    "run_protocol",
    "save_dataset",
    "save_model",
    "synth_blobs",
    "__version__",
]
