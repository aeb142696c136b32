"""
MNIST - IDX image and label files.

Layout (big-endian):
    images: magic 0x00000803, count, rows, cols, then count*rows*cols bytes
    labels: magic 0x00000801, count, then count bytes

Files ending in ``.gz`` (or starting with the gzip signature) are
decompressed transparently.
"""

from __future__ import annotations

import gzip
import logging
import struct
import zlib
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from ..cnn.model import Dataset
from ..errors import DataFormatError


logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
_GZIP_SIGNATURE = b"\x1f\x8b"

SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _read_bytes(path: Path) -> bytes:
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DataFormatError(f"cannot read IDX file: {e}", path=path) from e
    if raw.startswith(_GZIP_SIGNATURE):
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError, zlib.error) as e:
            raise DataFormatError(f"corrupt gzip stream: {e}", path=path) from e
    return raw


def read_idx(path: Path | str, expected_magic: int) -> np.ndarray:
    """Parse one IDX file of unsigned bytes into an array of its declared dims.

    Raises:
        DataFormatError: On a wrong magic number, a truncated header or body,
            or trailing bytes; the message carries the byte offset
    """
    path = Path(path)
    data = _read_bytes(path)
    if len(data) < 4:
        raise DataFormatError("truncated magic number", path=path, offset=len(data))
    (magic,) = struct.unpack_from(">I", data, 0)
    if magic != expected_magic:
        raise DataFormatError(
            f"bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}", path=path, offset=0
        )

    ndim = expected_magic & 0xFF
    header_end = 4 + 4 * ndim
    if len(data) < header_end:
        raise DataFormatError(f"truncated header, need {header_end} bytes", path=path, offset=len(data))
    dims = struct.unpack_from(f">{ndim}I", data, 4)

    body = int(np.prod(dims, dtype=np.int64))
    if len(data) < header_end + body:
        raise DataFormatError(
            f"truncated body: {len(data) - header_end} of {body} bytes", path=path, offset=len(data)
        )
    if len(data) > header_end + body:
        raise DataFormatError("trailing bytes after body", path=path, offset=header_end + body)

    return np.frombuffer(data, dtype=np.uint8, count=body, offset=header_end).reshape(dims)


def load_mnist(images_path: Path | str, labels_path: Path | str) -> Dataset:
    """Load an IDX image/label pair as a Dataset with pixels scaled by 1/255.

    Raises:
        DataFormatError: On malformed files, a count mismatch or labels above 9
    """
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"{images.shape[0]} images but {labels.shape[0]} labels", path=Path(labels_path), offset=4
        )
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise DataFormatError(
            f"label {int(labels[bad[0]])} out of range", path=Path(labels_path), offset=8 + int(bad[0])
        )

    logger.info(f"Loaded {images.shape[0]} images of {images.shape[1]}x{images.shape[2]} from {images_path}")
    return Dataset(images=images.astype(float) / 255.0, labels=labels.astype(np.int64))


def _find(directory: Path, stem: str) -> Optional[Path]:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx")):
        candidate = directory / name
        if candidate.exists():
            return candidate
    return None


def split_paths(directory: Path | str, split: str = "test") -> Tuple[Path, Path]:
    """Locate the standard image/label file names of a split inside ``directory``.

    Raises:
        DataFormatError: If either file is missing
    """
    directory = Path(directory)
    if split not in SPLIT_FILES:
        raise DataFormatError(f"unknown split {split!r}", path=directory)
    found = []
    for stem in SPLIT_FILES[split]:
        path = _find(directory, stem)
        if path is None:
            raise DataFormatError(f"missing {stem}[.gz]", path=directory)
        found.append(path)
    return found[0], found[1]


def load_mnist_dir(directory: Path | str, split: str = "test", limit: Optional[int] = None) -> Dataset:
    """Load the train or test split from a directory of standard MNIST files."""
    images_path, labels_path = split_paths(directory, split)
    dataset = load_mnist(images_path, labels_path)
    return dataset.subset(limit) if limit is not None else dataset


def save_dataset_idx(dataset: Dataset, images_path: Path | str, labels_path: Path | str) -> None:
    """Write a Dataset as IDX files; pixels are rounded to the nearest 1/255 step.

    Paths ending in ``.gz`` are gzip-compressed with a zero mtime so the
    output is byte-stable.
    """
    n, rows, cols = dataset.images.shape
    pixels = np.clip(np.rint(dataset.images * 255.0), 0, 255).astype(np.uint8)
    image_bytes = struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols) + pixels.tobytes()
    label_bytes = struct.pack(">II", LABELS_MAGIC, n) + dataset.labels.astype(np.uint8).tobytes()

    for path, payload in ((Path(images_path), image_bytes), (Path(labels_path), label_bytes)):
        if path.suffix == ".gz":
            payload = gzip.compress(payload, mtime=0)
        path.write_bytes(payload)
