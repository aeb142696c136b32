"""
DeepBench - GPU convolution benchmark rows.

CSV with header ``w,h,d,n,k,r_w,r_h,s,gpu,runtime_s``. Lines starting with
``#`` are comments. Each line is one (shape, GPU) measurement; consecutive
lines sharing a shape form one benchmark row. A blank ``runtime_s`` marks a
missing measurement.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from ..config import PerfConfig
from ..conv import output_dims
from ..errors import ContractError, DataFormatError
from ..perf import BenchRow, GpuRecord, shape_from_row


logger = logging.getLogger(__name__)

HEADER = ["w", "h", "d", "n", "k", "r_w", "r_h", "s", "gpu", "runtime_s"]
_INT_FIELDS = HEADER[:8]


def _parse_line(
    cells: List[str], lineno: int, path: Path, cfg: PerfConfig
) -> Tuple[Tuple[int, ...], GpuRecord]:
    if len(cells) != len(HEADER):
        raise DataFormatError(f"expected {len(HEADER)} columns, got {len(cells)}", path=path, line=lineno)
    values = dict(zip(HEADER, (c.strip() for c in cells)))

    try:
        dims = tuple(int(values[name]) for name in _INT_FIELDS)
    except ValueError as e:
        raise DataFormatError(f"non-integer shape field: {e}", path=path, line=lineno) from e

    runtime: Optional[float] = None
    if values["runtime_s"]:
        try:
            runtime = float(values["runtime_s"])
        except ValueError as e:
            raise DataFormatError(f"bad runtime {values['runtime_s']!r}", path=path, line=lineno) from e

    name = values["gpu"]
    if not name:
        raise DataFormatError("empty gpu name", path=path, line=lineno)
    try:
        gpu = GpuRecord(name=name, power_w=cfg.gpu_power_w.get(name), runtime_s=runtime)
    except ContractError as e:
        raise DataFormatError(str(e), path=path, line=lineno) from e
    return dims, gpu


def load_deepbench(path: Path | str, cfg: Optional[PerfConfig] = None) -> List[BenchRow]:
    """Parse a benchmark CSV into rows of shapes with their GPU records.

    GPU powers come from ``cfg.gpu_power_w``; unknown GPUs get no power and
    are flagged later by the comparison report.

    Raises:
        DataFormatError: On a wrong header, a malformed line, an invalid shape
            or a row whose R_w R_h D exceeds the MRR budget (with line number)
    """
    path = Path(path)
    cfg = cfg or PerfConfig()
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DataFormatError(f"cannot read: {e}", path=path) from e

    numbered = [
        (i, line) for i, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not numbered:
        logger.warning(f"{path} holds no benchmark rows")
        return []

    header_line, header = numbered[0]
    if [h.strip() for h in next(csv.reader([header]))] != HEADER:
        raise DataFormatError(f"header must be {','.join(HEADER)}", path=path, line=header_line)

    rows: List[BenchRow] = []
    index: Dict[Tuple[int, ...], BenchRow] = {}
    for lineno, line in numbered[1:]:
        cells = next(csv.reader([line]))
        dims, gpu = _parse_line(cells, lineno, path, cfg)
        w, h, d, n, k, r_w, r_h, s = dims

        if r_w * r_h * d > cfg.mrr_budget:
            raise DataFormatError(
                f"R_w R_h D = {r_w * r_h * d} exceeds the MRR budget of {cfg.mrr_budget}",
                path=path, line=lineno,
            )
        if dims not in index:
            try:
                shape = shape_from_row(*dims)
                output_dims(shape)
            except (ValidationError, ContractError) as e:
                raise DataFormatError(f"invalid shape: {e}", path=path, line=lineno) from e
            index[dims] = BenchRow(shape=shape)
            rows.append(index[dims])
        index[dims].gpus.append(gpu)

    if not rows:
        logger.warning(f"{path} holds a header but no benchmark rows")
    logger.debug(f"Loaded {len(rows)} benchmark rows from {path}")
    return rows
