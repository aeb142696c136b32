"""Uniform quantization of envelopes and normalized weights."""

from __future__ import annotations

import numpy as np

from .config import QuantSpec
from .errors import ContractError


def level_step(lo: float, hi: float, bits: int) -> float:
    """Spacing between adjacent levels of a ``bits``-bit grid over [lo, hi]."""
    return (hi - lo) / (2**bits - 1)


def quantize(values: np.ndarray | float, lo: float, hi: float, bits: int) -> np.ndarray:
    """Snap values to the nearest of 2**bits uniform levels spanning [lo, hi].

    Ties round half away from zero in level-index space. Values outside the
    interval are clipped to it first.
    """
    if not hi > lo:
        raise ContractError(f"empty quantization interval [{lo}, {hi}]")
    top = 2**bits - 1
    step = level_step(lo, hi, bits)
    x = np.clip(np.asarray(values, dtype=float), lo, hi)
    idx = (x - lo) / step
    idx = np.clip(np.floor(idx + 0.5), 0, top)
    q = lo + idx * step
    # pin the end levels so lo and hi are represented exactly
    return np.where(idx == top, hi, q)


def apply_quant(values: np.ndarray | float, lo: float, hi: float, spec: QuantSpec) -> np.ndarray:
    """Quantize when ``spec`` is enabled, otherwise return the values unchanged."""
    if not spec.enabled:
        return np.asarray(values, dtype=float)
    return quantize(values, lo, hi, spec.bits)
