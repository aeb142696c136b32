"""
Conv - DEAP convolution engine and digital reference.

Tensors are numpy arrays in row-major order: images are H x W x D, kernel
stacks are R_h x R_w x D x K, outputs are OH x OW x K.

Key Features:
- Direct-loop digital oracle and zero padding
- Single convolved pixel through the simulated photonic unit
- Full strided convolution with K kernels and n_conv parallel units
- Closed-form (ceiling) and simulated (floor) output dimensions
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from .config import DeapBounds, MrrParams, QuantSpec
from .errors import ConfigurationError, ContractError, DeapSimError
from .weight_bank import check_envelopes, program_bank, realize_envelopes


logger = logging.getLogger(__name__)


class ConvShape(BaseModel):
    """Convolution parameters (N, H, W, D, R, K, S).

    Square kernels set ``r``; rectangular kernels set ``r_h`` and ``r_w``.
    H and W include any padding.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(1, ge=1)
    h: int = Field(..., ge=1)
    w: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    r: Optional[int] = Field(None, ge=1)
    r_h: Optional[int] = Field(None, ge=1)
    r_w: Optional[int] = Field(None, ge=1)
    k: int = Field(1, ge=1)
    s: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _kernel_edges(self) -> Self:
        if self.r is None and (self.r_h is None or self.r_w is None):
            raise ValueError("set r, or both r_h and r_w")
        return self

    @property
    def kernel_h(self) -> int:
        return self.r_h if self.r_h is not None else int(self.r)  # type: ignore[arg-type]

    @property
    def kernel_w(self) -> int:
        return self.r_w if self.r_w is not None else int(self.r)  # type: ignore[arg-type]

    @property
    def unit_mrrs(self) -> int:
        """Modulator rings one unit needs for this shape (R_h R_w D)."""
        return self.kernel_h * self.kernel_w * self.d

    @classmethod
    def for_tensors(cls, a: np.ndarray, f: np.ndarray, s: int = 1, n: int = 1) -> Self:
        return cls(n=n, h=a.shape[0], w=a.shape[1], d=a.shape[2], r_h=f.shape[0], r_w=f.shape[1], k=f.shape[3], s=s)


@dataclass(frozen=True)
class OutputDims:
    """Output dimensions under both counting conventions.

    Attributes:
        formula_h, formula_w: ceil((H - R) / S + 1), as the closed-form estimate uses
        sim_h, sim_w: floor((H - R) / S) + 1, the positions the engine visits
        k: Number of kernels
    """
    formula_h: int
    formula_w: int
    sim_h: int
    sim_w: int
    k: int

    @property
    def sim_pixels(self) -> int:
        return self.sim_h * self.sim_w

    @property
    def formula_pixels(self) -> int:
        return self.formula_h * self.formula_w


def output_dims(shape: ConvShape) -> OutputDims:
    """Output dimensions of a convolution.

    Raises:
        ContractError: If the kernel is larger than the input
    """
    if shape.kernel_h > shape.h or shape.kernel_w > shape.w:
        raise ContractError(
            f"kernel {shape.kernel_h}x{shape.kernel_w} larger than input {shape.h}x{shape.w}"
        )
    span_h = shape.h - shape.kernel_h
    span_w = shape.w - shape.kernel_w
    return OutputDims(
        formula_h=-(-span_h // shape.s) + 1,
        formula_w=-(-span_w // shape.s) + 1,
        sim_h=span_h // shape.s + 1,
        sim_w=span_w // shape.s + 1,
        k=shape.k,
    )


def _check_pair(a: np.ndarray, f: np.ndarray, s: int) -> None:
    if a.ndim != 3:
        raise ContractError(f"image must be H x W x D, got shape {a.shape}")
    if f.ndim != 4:
        raise ContractError(f"kernels must be R_h x R_w x D x K, got shape {f.shape}")
    if f.shape[2] != a.shape[2]:
        raise ContractError(f"kernel depth {f.shape[2]} != image depth {a.shape[2]}")
    if f.shape[0] > a.shape[0] or f.shape[1] > a.shape[1]:
        raise ContractError(f"kernel {f.shape[:2]} larger than image {a.shape[:2]}")
    if s < 1:
        raise ContractError(f"stride must be >= 1, got {s}")


def zero_pad(a: np.ndarray, pad: int) -> np.ndarray:
    """Surround an H x W x D tensor with ``pad`` zeros on each spatial side."""
    if pad < 0:
        raise ContractError(f"padding must be non-negative, got {pad}")
    a = np.asarray(a, dtype=float)
    if pad == 0:
        return a.copy()
    return np.pad(a, ((pad, pad), (pad, pad), (0, 0)))


def oracle_convolve(a: np.ndarray, f: np.ndarray, s: int = 1) -> np.ndarray:
    """Digital reference: O[i, j, k] = sum F[m, n, c, k] A[iS + m, jS + n, c]."""
    a = np.asarray(a, dtype=float)
    f = np.asarray(f, dtype=float)
    _check_pair(a, f, s)

    r_h, r_w, _, k = f.shape
    oh = (a.shape[0] - r_h) // s + 1
    ow = (a.shape[1] - r_w) // s + 1
    out = np.empty((oh, ow, k))
    for i in range(oh):
        for j in range(ow):
            window = a[i * s:i * s + r_h, j * s:j * s + r_w, :]
            out[i, j, :] = np.tensordot(window, f, axes=3)
    return out


def _check_bounds(r_h: int, r_w: int, d: int, bounds: DeapBounds) -> None:
    if r_h > bounds.r_m or r_w > bounds.r_m:
        raise ConfigurationError(f"kernel {r_h}x{r_w} exceeds R_m={bounds.r_m}")
    if d > bounds.d_m:
        raise ConfigurationError(f"depth {d} exceeds D_m={bounds.d_m}")


def single_pixel(
    window: np.ndarray,
    kernel: np.ndarray,
    bounds: DeapBounds,
    quant: QuantSpec,
    params: Optional[MrrParams] = None,
    *,
    fast: bool = False,
) -> float:
    """One convolved pixel through the photonic unit.

    Line c carries the R^2 envelopes of window[:, :, c]; its weight bank holds
    kernel[:, :, c] vectorized row by row. All D_m lines of R_m^2 rings are
    simulated: unused rings and lines are programmed to zero and their
    contribution is checked to be exactly 0 before the voltage adder sums the
    line outputs.

    Raises:
        ConfigurationError: If the window does not fit the unit's bounds
        ContractError: If shapes disagree or envelopes leave [0, 1]
    """
    params = params or MrrParams()
    window = np.asarray(window, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    if window.ndim != 3 or window.shape != kernel.shape:
        raise ContractError(f"window {window.shape} and kernel {kernel.shape} must match and be 3-D")
    r_h, r_w, d = window.shape
    _check_bounds(r_h, r_w, d, bounds)
    check_envelopes(window)

    slots = bounds.wavelengths
    total = 0.0
    for c in range(bounds.d_m):
        mu_line = np.zeros(slots)
        w_line = np.zeros(slots)
        if c < d:
            mu_line[: r_h * r_w] = window[:, :, c].ravel()
            w_line[: r_h * r_w] = kernel[:, :, c].ravel()
        mu_line = realize_envelopes(mu_line, quant, params)
        bank = program_bank(w_line, params, quant, fast=fast)
        line_out = float(bank.dot(mu_line))
        if c >= d and line_out != 0.0:
            raise DeapSimError(f"idle line {c} leaked {line_out!r} into the adder")
        idle = bank.f_star[r_h * r_w :] * mu_line[r_h * r_w :]
        if np.any(idle != 0.0):
            raise DeapSimError(f"idle rings of line {c} leaked into the balanced current")
        total += line_out
    return total


@dataclass
class ConvResult:
    """Result of a DEAP convolution pass.

    Attributes:
        output: OH x OW x K output tensor
        cycles: Unit cycles spent, K * ceil(P / n_conv)
        pixels_per_kernel: Output pixels P per kernel
        n_conv: Number of parallel units used
        unit_pixels: Pixels computed by each unit over the whole pass
    """
    output: np.ndarray
    cycles: int
    pixels_per_kernel: int
    n_conv: int
    unit_pixels: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "output_shape": list(self.output.shape),
            "cycles": self.cycles,
            "pixels_per_kernel": self.pixels_per_kernel,
            "n_conv": self.n_conv,
            "unit_pixels": self.unit_pixels,
        }


def cycle_count(k: int, pixels: int, n_conv: int) -> int:
    """Cycles to produce ``pixels`` outputs for each of ``k`` kernels on ``n_conv`` units."""
    return k * math.ceil(pixels / n_conv)


def _kernel_plane(
    mu: np.ndarray, f_k: np.ndarray, params: MrrParams, quant: QuantSpec, fast: bool
) -> np.ndarray:
    # mu: P x D x R^2 envelopes, f_k: R_h x R_w x D weights of one kernel
    d = f_k.shape[2]
    plane = np.zeros(mu.shape[0])
    for c in range(d):
        bank = program_bank(f_k[:, :, c].ravel(), params, quant, fast=fast)
        plane = plane + bank.dot(mu[:, c, :])
    return plane


def deap_convolve(
    a: np.ndarray,
    f: np.ndarray,
    shape: Optional[ConvShape] = None,
    bounds: Optional[DeapBounds] = None,
    quant: Optional[QuantSpec] = None,
    params: Optional[MrrParams] = None,
    *,
    fast: bool = False,
    threads: int = 1,
) -> ConvResult:
    """Strided convolution of a pre-padded image on simulated DEAP hardware.

    Weight banks are programmed once per kernel; the window strides over the
    image and each output pixel is the voltage-adder sum of the per-line PWB
    outputs. Pixels are handed to the n_conv units round-robin. Kernels may
    be evaluated on several threads; the output does not depend on it.

    Only the rings a kernel uses are simulated; every pixel equals what
    ``single_pixel`` computes on the full D_m x R_m^2 unit.

    Returns:
        ConvResult with the OH x OW x K output and cycle accounting

    Raises:
        ConfigurationError: If the kernel does not fit the bounds
        ContractError: On shape mismatches or envelopes outside [0, 1]
    """
    bounds = bounds or DeapBounds()
    quant = quant or QuantSpec()
    params = params or MrrParams()
    a = np.asarray(a, dtype=float)
    f = np.asarray(f, dtype=float)

    stride = shape.s if shape is not None else 1
    _check_pair(a, f, stride)
    if shape is not None:
        expected = (shape.h, shape.w, shape.d, shape.kernel_h, shape.kernel_w, shape.k)
        actual = (a.shape[0], a.shape[1], a.shape[2], f.shape[0], f.shape[1], f.shape[3])
        if expected != actual:
            raise ContractError(f"tensors {actual} do not match shape {expected}")
    r_h, r_w, d, k = f.shape
    _check_bounds(r_h, r_w, d, bounds)
    check_envelopes(a)

    windows = sliding_window_view(a, (r_h, r_w), axis=(0, 1))[::stride, ::stride]
    oh, ow = windows.shape[:2]
    pixels = oh * ow
    # windows: oh x ow x D x R_h x R_w -> P x D x R_h R_w (rows, then columns)
    mu = realize_envelopes(windows.reshape(pixels, d, r_h * r_w), quant, params)

    if threads > 1 and k > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            planes = list(pool.map(lambda kk: _kernel_plane(mu, f[..., kk], params, quant, fast), range(k)))
    else:
        planes = [_kernel_plane(mu, f[..., kk], params, quant, fast) for kk in range(k)]

    output = np.stack(planes, axis=-1).reshape(oh, ow, k)

    n_conv = bounds.n_conv
    per_unit = np.bincount(np.arange(pixels) % n_conv, minlength=n_conv) * k
    cycles = cycle_count(k, pixels, n_conv)
    logger.debug(f"DEAP convolution {a.shape} * {f.shape} stride {stride}: {pixels} px/kernel, {cycles} cycles")

    return ConvResult(
        output=output,
        cycles=cycles,
        pixels_per_kernel=pixels,
        n_conv=n_conv,
        unit_pixels=[int(x) for x in per_unit],
    )
