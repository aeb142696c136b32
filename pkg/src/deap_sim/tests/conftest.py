"""Pytest fixtures for deap_sim tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from deap_sim.cnn.model import CnnModel, Dataset
from deap_sim.config import MrrParams
from deap_sim.io import save_dataset_idx, save_model


REPO_ROOT = Path(__file__).resolve().parents[3]
DEEPBENCH_FIXTURE = REPO_ROOT / "fixtures" / "deepbench_conv.csv"


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so property sweeps are reproducible."""
    return np.random.default_rng(20240607)


@pytest.fixture
def params() -> MrrParams:
    """Default lossy ring (r = a = 0.99, consistent mode)."""
    return MrrParams()


@pytest.fixture
def lossless() -> MrrParams:
    """Lossless ring with moderate coupling."""
    return MrrParams(r=0.9, a=1.0)


@pytest.fixture
def random_model() -> CnnModel:
    return CnnModel.random(seed=3)


@pytest.fixture
def tiny_dataset() -> Dataset:
    """Three 28 x 28 images on the 1/255 grid with labels 0, 1, 2."""
    gen = np.random.default_rng(7)
    images = gen.integers(0, 256, size=(3, 28, 28)) / 255.0
    return Dataset(images=images, labels=np.array([0, 1, 2]))


@pytest.fixture
def mnist_dir(tmp_path: Path, tiny_dataset: Dataset) -> Path:
    """Directory with a train and a test split in IDX format.

    Args:
        tmp_path: pytest's built-in temporary path fixture
        tiny_dataset: Images to write

    Returns:
        Path to the directory
    """
    directory = tmp_path / "mnist"
    directory.mkdir()
    save_dataset_idx(tiny_dataset, directory / "t10k-images-idx3-ubyte", directory / "t10k-labels-idx1-ubyte")
    save_dataset_idx(
        tiny_dataset, directory / "train-images-idx3-ubyte.gz", directory / "train-labels-idx1-ubyte.gz"
    )
    return directory


@pytest.fixture
def model_file(tmp_path: Path, random_model: CnnModel) -> Path:
    path = tmp_path / "model.json"
    save_model(path, random_model)
    return path


@pytest.fixture
def deepbench_csv() -> Path:
    return DEEPBENCH_FIXTURE
