"""File formats: MNIST IDX, model and tensor JSON, DeepBench CSV."""

from .deepbench import HEADER as DEEPBENCH_HEADER
from .deepbench import load_deepbench
from .mnist import load_mnist, load_mnist_dir, read_idx, save_dataset_idx, split_paths
from .model_io import load_model, save_model
from .tensor_io import load_tensor, save_tensor

__all__ = [
    "DEEPBENCH_HEADER",
    "load_deepbench",
    "load_mnist",
    "load_mnist_dir",
    "load_model",
    "load_tensor",
    "read_idx",
    "save_dataset_idx",
    "save_model",
    "save_tensor",
    "split_paths",
]
