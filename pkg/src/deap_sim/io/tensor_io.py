"""Tensor JSON documents: {"format_version": 1, "shape": [...], "data": [...]} in row-major order."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict

import numpy as np

from ..errors import DataFormatError, SchemaError


FORMAT_VERSION = 1


def encode_array(array: np.ndarray) -> Dict[str, Any]:
    array = np.asarray(array, dtype=float)
    return {"shape": list(array.shape), "data": [float(x) for x in array.ravel()]}


def decode_array(obj: Any, field: str, path: Path | None = None) -> np.ndarray:
    """Turn a {"shape", "data"} object into an array, validating both parts.

    Raises:
        SchemaError: Naming ``field`` when the object is malformed
    """
    if not isinstance(obj, dict) or "shape" not in obj or "data" not in obj:
        raise SchemaError("expected an object with 'shape' and 'data'", field=field, path=path)
    shape, data = obj["shape"], obj["data"]
    if not isinstance(shape, list) or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in shape):
        raise SchemaError(f"bad shape {shape!r}", field=field, path=path)
    if not isinstance(data, list):
        raise SchemaError("data must be a list of numbers", field=field, path=path)
    return decode_vector(data, field, path, expected=math.prod(shape)).reshape(shape)


def decode_vector(data: Any, field: str, path: Path | None = None, expected: int | None = None) -> np.ndarray:
    if not isinstance(data, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in data
    ):
        raise SchemaError("expected a list of numbers", field=field, path=path)
    if expected is not None and len(data) != expected:
        raise SchemaError(f"{len(data)} values, shape needs {expected}", field=field, path=path)
    array = np.asarray(data, dtype=float)
    if not np.all(np.isfinite(array)):
        raise SchemaError("values must be finite", field=field, path=path)
    return array


def read_json(path: Path) -> Any:
    """Parse a JSON file, mapping syntax errors to DataFormatError with the line number."""
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DataFormatError(f"cannot read: {e}", path=path) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"invalid JSON: {e.msg}", path=path, line=e.lineno) from e


def check_version(doc: Any, path: Path) -> Dict[str, Any]:
    if not isinstance(doc, dict):
        raise DataFormatError("top level must be a JSON object", path=path)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported version {version!r}, expected {FORMAT_VERSION}", field="format_version", path=path)
    return doc


def dump_json(doc: Dict[str, Any]) -> str:
    return json.dumps(doc, separators=(",", ":"), allow_nan=False) + "\n"


def load_tensor(path: Path | str) -> np.ndarray:
    path = Path(path)
    doc = check_version(read_json(path), path)
    return decode_array(doc, field="tensor", path=path)


def save_tensor(path: Path | str, array: np.ndarray) -> None:
    doc = {"format_version": FORMAT_VERSION, **encode_array(array)}
    Path(path).write_text(dump_json(doc), encoding="utf-8")
