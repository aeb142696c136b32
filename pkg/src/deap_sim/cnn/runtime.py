"""
Runtime - Two-layer MNIST CNN running its convolutions on DEAP.

Pipeline per image:
    conv1 -> +bias -> ReLU -> conv2 -> +bias -> ReLU -> 2x2 average pool
    (stride 1) -> even-index downsample -> flatten -> fc1 -> ReLU -> fc2

Convolutions run on the chosen backend: the digital oracle or the simulated
photonic hardware. Everything else is digital, as on the host side of the
hardware dataflow.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config import DeapBounds, MrrParams, QuantSpec
from ..conv import deap_convolve, oracle_convolve
from ..errors import ContractError
from ..perf import DEFAULT_PIXEL_TIME_S
from .model import IMAGE_SIDE, CnnModel, Dataset


logger = logging.getLogger(__name__)


class Backend(str, Enum):
    PHOTONIC = "photonic"
    DIGITAL = "digital"


def relu(t: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x)."""
    return np.maximum(np.asarray(t, dtype=float), 0.0)


def avg_pool_s1(t: np.ndarray) -> np.ndarray:
    """2x2 all-1/4 kernel per channel with stride 1: H x W x D -> (H-1) x (W-1) x D."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 3 or t.shape[0] < 2 or t.shape[1] < 2:
        raise ContractError(f"average pool needs an H x W x D tensor with H, W >= 2, got {t.shape}")
    return (t[:-1, :-1] + t[:-1, 1:] + t[1:, :-1] + t[1:, 1:]) * 0.25


def even_index_downsample(t: np.ndarray) -> np.ndarray:
    """Keep zero-based even spatial indices in both dimensions."""
    t = np.asarray(t, dtype=float)
    return t[::2, ::2]


def flatten(t: np.ndarray) -> np.ndarray:
    """Flatten H x W x D by row, then column, then channel."""
    return np.asarray(t, dtype=float).reshape(-1)


def fully_connected(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """W x + b with W given as out_features x in_features."""
    x = np.asarray(x, dtype=float)
    weight = np.asarray(weight, dtype=float)
    bias = np.asarray(bias, dtype=float)
    if weight.ndim != 2 or x.shape != (weight.shape[1],) or bias.shape != (weight.shape[0],):
        raise ContractError(f"fully connected dims disagree: W {weight.shape}, x {x.shape}, b {bias.shape}")
    return weight @ x + bias


@dataclass
class InferenceTrace:
    """What one forward pass did.

    Attributes:
        scores: Class scores
        shapes: Tensor shape after each named stage
        cycles: DEAP cycles per photonic convolution layer
        input_scales: Per-layer input maximum used to normalize envelopes
        pixel_time_s: Time per convolved pixel used for the estimate
    """
    scores: np.ndarray
    shapes: List[Tuple[str, Tuple[int, ...]]] = field(default_factory=list)
    cycles: Dict[str, int] = field(default_factory=dict)
    input_scales: Dict[str, float] = field(default_factory=dict)
    pixel_time_s: float = DEFAULT_PIXEL_TIME_S

    @property
    def total_cycles(self) -> int:
        return sum(self.cycles.values())

    @property
    def hardware_time_s(self) -> float:
        """Convolution time on the photonic unit(s): cycles x pixel time."""
        return self.total_cycles * self.pixel_time_s

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.scores))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scores": [float(s) for s in self.scores],
            "prediction": self.prediction,
            "shapes": [{"stage": name, "shape": list(shape)} for name, shape in self.shapes],
            "cycles": dict(self.cycles),
            "input_scales": dict(self.input_scales),
            "total_cycles": self.total_cycles,
            "hardware_time_s": self.hardware_time_s,
        }


def _conv_layer(
    name: str,
    x: np.ndarray,
    kernels: np.ndarray,
    bias: np.ndarray,
    backend: Backend,
    bounds: DeapBounds,
    quant: QuantSpec,
    params: MrrParams,
    trace: InferenceTrace,
) -> np.ndarray:
    if backend is Backend.DIGITAL:
        out = oracle_convolve(x, kernels, 1)
    else:
        # envelopes must lie in [0, 1]; divide by the layer max and restore it after the adder
        scale = float(np.max(x)) if x.size else 0.0
        normalized = x / scale if scale > 0.0 else np.zeros_like(x)
        result = deap_convolve(normalized, kernels, bounds=bounds, quant=quant, params=params)
        out = result.output * scale
        trace.cycles[name] = result.cycles
        trace.input_scales[name] = scale
    return out + bias


def _as_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if image.shape == (IMAGE_SIDE, IMAGE_SIDE):
        image = image[:, :, None]
    if image.shape != (IMAGE_SIDE, IMAGE_SIDE, 1):
        raise ContractError(f"expected a {IMAGE_SIDE}x{IMAGE_SIDE}x1 image, got {image.shape}")
    if image.min() < 0.0 or image.max() > 1.0:
        raise ContractError("image values must lie in [0, 1]")
    return image


def deap_infer_traced(
    model: CnnModel,
    image: np.ndarray,
    bounds: Optional[DeapBounds] = None,
    quant: Optional[QuantSpec] = None,
    backend: Backend | str = Backend.PHOTONIC,
    params: Optional[MrrParams] = None,
    pixel_time_s: float = DEFAULT_PIXEL_TIME_S,
) -> InferenceTrace:
    """Forward pass that also records shapes and hardware cycles."""
    backend = Backend(backend)
    bounds = bounds or DeapBounds()
    quant = quant or QuantSpec()
    params = params or MrrParams()

    x = _as_image(image)
    trace = InferenceTrace(scores=np.zeros(0), pixel_time_s=pixel_time_s)
    trace.shapes.append(("input", x.shape))

    x = relu(_conv_layer("conv1", x, model.conv1, model.conv1_bias, backend, bounds, quant, params, trace))
    trace.shapes.append(("conv1", x.shape))
    x = relu(_conv_layer("conv2", x, model.conv2, model.conv2_bias, backend, bounds, quant, params, trace))
    trace.shapes.append(("conv2", x.shape))
    x = avg_pool_s1(x)
    trace.shapes.append(("pool", x.shape))
    x = even_index_downsample(x)
    trace.shapes.append(("downsample", x.shape))
    v = flatten(x)
    trace.shapes.append(("flatten", v.shape))
    v = relu(fully_connected(v, model.fc1, model.fc1_bias))
    trace.shapes.append(("fc1", v.shape))
    v = fully_connected(v, model.fc2, model.fc2_bias)
    trace.shapes.append(("fc2", v.shape))

    trace.scores = v
    return trace


def deap_infer(
    model: CnnModel,
    image: np.ndarray,
    bounds: Optional[DeapBounds] = None,
    quant: Optional[QuantSpec] = None,
    backend: Backend | str = Backend.PHOTONIC,
    params: Optional[MrrParams] = None,
) -> np.ndarray:
    """Class scores (length 10) for one 28 x 28 x 1 image in [0, 1]."""
    return deap_infer_traced(model, image, bounds, quant, backend, params).scores


def predict(
    model: CnnModel,
    dataset: Dataset,
    backend: Backend | str = Backend.PHOTONIC,
    quant: Optional[QuantSpec] = None,
    bounds: Optional[DeapBounds] = None,
    params: Optional[MrrParams] = None,
    threads: int = 1,
) -> np.ndarray:
    """Predicted class of every image; ties go to the lowest class index."""

    def _one(index: int) -> int:
        scores = deap_infer(model, dataset.image(index), bounds, quant, backend, params)
        return int(np.argmax(scores))

    indices = range(len(dataset))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            preds = list(pool.map(_one, indices))
    else:
        preds = [_one(i) for i in indices]
    return np.asarray(preds, dtype=np.int64)


def evaluate(
    model: CnnModel,
    dataset: Dataset,
    backend: Backend | str = Backend.PHOTONIC,
    quant: Optional[QuantSpec] = None,
    bounds: Optional[DeapBounds] = None,
    params: Optional[MrrParams] = None,
    threads: int = 1,
) -> float:
    """Fraction of images whose arg-max score equals the label.

    Raises:
        ContractError: If the dataset is empty
    """
    if len(dataset) == 0:
        raise ContractError("cannot evaluate on an empty dataset")
    preds = predict(model, dataset, backend, quant, bounds, params, threads)
    accuracy = float(np.mean(preds == dataset.labels))
    logger.info(f"{Backend(backend).value} accuracy on {len(dataset)} images: {accuracy:.4f}")
    return accuracy
