"""
deap-sim: Simulator for a digital-electronic analog-photonic CNN accelerator

Models the optical building blocks of a photonic convolution engine (microring
modulators, photonic weight banks, balanced detection) in numpy, runs a small
MNIST CNN on them, and estimates speed and power of a full build.

Core Components:
- Device: Microring transfer functions and their inversions
- Weight bank: Normalized, quantized dot products on add-drop rings
- Conv: Strided convolution on simulated hardware plus a digital reference
- CNN: Two-layer MNIST network, inference and reference training
- Perf: Propagation, throughput, power and runtime model
"""

from typing import Final

__version__: Final[str] = "0.1.0"
__license__: Final[str] = "MIT"

from .config import DeapBounds, EquationMode, MrrParams, PerfConfig, QuantSpec, RunConfig
from .conv import ConvResult, ConvShape, deap_convolve, oracle_convolve, output_dims, single_pixel
from .errors import (
    AcceptanceError,
    ConfigurationError,
    ContractError,
    DataFormatError,
    DeapSimError,
    DeviceRangeError,
    SchemaError,
)
from .weight_bank import PwbConfig, pwb_dot, signed_pwb_dot

__all__ = [
    # Version info
    "__version__",
    "__license__",
    # Config
    "DeapBounds",
    "EquationMode",
    "MrrParams",
    "PerfConfig",
    "QuantSpec",
    "RunConfig",
    # Conv
    "ConvResult",
    "ConvShape",
    "deap_convolve",
    "oracle_convolve",
    "output_dims",
    "single_pixel",
    # Weight bank
    "PwbConfig",
    "pwb_dot",
    "signed_pwb_dot",
    # Errors
    "AcceptanceError",
    "ConfigurationError",
    "ContractError",
    "DataFormatError",
    "DeapSimError",
    "DeviceRangeError",
    "SchemaError",
]
