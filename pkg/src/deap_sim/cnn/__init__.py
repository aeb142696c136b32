"""Two-layer MNIST CNN on the DEAP convolution engine."""

from .model import IMAGE_SIDE, MODEL_SHAPES, NUM_CLASSES, CnnModel, Dataset
from .runtime import (
    Backend,
    InferenceTrace,
    avg_pool_s1,
    deap_infer,
    deap_infer_traced,
    evaluate,
    even_index_downsample,
    flatten,
    fully_connected,
    predict,
    relu,
)
from .trainer import TrainResult, train_reference

__all__ = [
    "IMAGE_SIDE",
    "MODEL_SHAPES",
    "NUM_CLASSES",
    "Backend",
    "CnnModel",
    "Dataset",
    "InferenceTrace",
    "TrainResult",
    "avg_pool_s1",
    "deap_infer",
    "deap_infer_traced",
    "evaluate",
    "even_index_downsample",
    "flatten",
    "fully_connected",
    "predict",
    "relu",
    "train_reference",
]
