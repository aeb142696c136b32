"""
Model files - CnnModel parameters as JSON.

Kernels and matrices are stored as {"shape": [...], "data": [...]} objects,
biases as flat lists. Floats are written with their shortest round-trip
representation, so save -> load is lossless and load -> save is byte-stable.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict

from ..cnn.model import MODEL_SHAPES, CnnModel
from ..errors import SchemaError
from .tensor_io import FORMAT_VERSION, check_version, decode_array, decode_vector, dump_json, encode_array, read_json


logger = logging.getLogger(__name__)


def model_to_doc(model: CnnModel) -> Dict[str, Any]:
    doc: Dict[str, Any] = {}
    for name, array in model.arrays().items():
        if name.endswith("_bias"):
            doc[name] = [float(x) for x in array]
        else:
            doc[name] = encode_array(array)
    doc["format_version"] = FORMAT_VERSION
    return doc


def save_model(path: Path | str, model: CnnModel) -> None:
    Path(path).write_text(dump_json(model_to_doc(model)), encoding="utf-8")
    logger.debug(f"Saved model to {path}")


def load_model(path: Path | str) -> CnnModel:
    """Read and validate a model file.

    Raises:
        DataFormatError: If the file is not valid JSON
        SchemaError: Naming the offending field on a missing entry or wrong shape
    """
    path = Path(path)
    doc = check_version(read_json(path), path)

    params = {}
    for name in MODEL_SHAPES:
        if name not in doc:
            raise SchemaError("missing", field=name, path=path)
        if name.endswith("_bias"):
            params[name] = decode_vector(doc[name], field=name, path=path)
        else:
            params[name] = decode_array(doc[name], field=name, path=path)

    extra = sorted(set(doc) - set(MODEL_SHAPES) - {"format_version"})
    if extra:
        raise SchemaError("unexpected field", field=extra[0], path=path)

    try:
        return CnnModel(**params)
    except SchemaError as e:
        raise SchemaError(e.detail, field=e.field, path=path) from e
