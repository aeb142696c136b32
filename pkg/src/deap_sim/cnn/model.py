"""CNN parameter and dataset containers."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Dict, Tuple

import numpy as np
from typing_extensions import Self

from ..errors import ContractError, SchemaError


IMAGE_SIDE = 28
NUM_CLASSES = 10

MODEL_SHAPES: Dict[str, Tuple[int, ...]] = {
    "conv1": (5, 5, 1, 8),
    "conv1_bias": (8,),
    "conv2": (5, 5, 8, 8),
    "conv2_bias": (8,),
    "fc1": (128, 800),
    "fc1_bias": (128,),
    "fc2": (10, 128),
    "fc2_bias": (10,),
}


@dataclass(frozen=True)
class CnnModel:
    """Parameters of the two-layer MNIST network.

    Convolution kernels are R x R x D x K stacks, fully connected matrices are
    out_features x in_features. fc1 consumes the pooled 10 x 10 x 8 feature
    flattened by row, then column, then channel.
    """
    conv1: np.ndarray
    conv1_bias: np.ndarray
    conv2: np.ndarray
    conv2_bias: np.ndarray
    fc1: np.ndarray
    fc1_bias: np.ndarray
    fc2: np.ndarray
    fc2_bias: np.ndarray

    def __post_init__(self) -> None:
        for f in fields(self):
            value = np.array(getattr(self, f.name), dtype=float)
            expected = MODEL_SHAPES[f.name]
            if value.shape != expected:
                raise SchemaError(f"expected shape {list(expected)}, got {list(value.shape)}", field=f.name)
            if not np.all(np.isfinite(value)):
                raise SchemaError("values must be finite", field=f.name)
            value.setflags(write=False)
            object.__setattr__(self, f.name, value)

    def arrays(self) -> Dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def random(cls, seed: int = 0, scale: float = 1.0) -> Self:
        """He-style random initialization, used for tests and smoke runs."""
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in MODEL_SHAPES.items():
            if name.endswith("_bias"):
                params[name] = rng.uniform(-0.05, 0.05, size=shape) * scale
            else:
                fan_in = int(np.prod(shape[:-1])) if name.startswith("conv") else shape[1]
                params[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape) * scale
        return cls(**params)


@dataclass(frozen=True)
class Dataset:
    """Grayscale images scaled to [0, 1] with integer labels 0-9.

    Attributes:
        images: N x 28 x 28 array
        labels: N integer labels
    """
    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        images = np.asarray(self.images, dtype=float)
        labels = np.asarray(self.labels).astype(np.int64)
        if images.ndim != 3:
            raise ContractError(f"images must be N x H x W, got {images.shape}")
        if labels.shape != (images.shape[0],):
            raise ContractError(f"{labels.shape} labels for {images.shape[0]} images")
        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise ContractError("image values must lie in [0, 1]")
        if labels.size and (labels.min() < 0 or labels.max() >= NUM_CLASSES):
            raise ContractError("labels must lie in [0, 9]")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, count: int, start: int = 0) -> "Dataset":
        return Dataset(self.images[start:start + count], self.labels[start:start + count])

    def image(self, index: int) -> np.ndarray:
        """Image ``index`` as an H x W x 1 tensor."""
        return self.images[index][:, :, None]
