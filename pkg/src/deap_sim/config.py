"""
Config - Validated parameter records and run configuration.

Every tunable number of the simulator lives in one of the frozen pydantic
records below. The records double as the schema of the run configuration
file accepted by ``deap-sim --config``.

Key Features:
- Device, quantization, hardware-bound and performance parameter records
- Aggregate RunConfig loaded from JSON or TOML
- Thread cap resolution (DEAP_SIM_THREADS, else physical cores)
- Stable configuration hashing for run manifests
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Literal, Optional

import psutil
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from typing_extensions import Self

from .errors import ConfigurationError


logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "DEAP_SIM_THREADS"
MAX_WAVELENGTHS = 100


class EquationMode(str, Enum):
    """Which ring equations to evaluate.

    ``consistent`` applies the minimal algebraic corrections that make the
    forward transfers and their inversions agree; ``verbatim`` evaluates the
    formulas exactly as printed in the source analysis.
    """

    VERBATIM = "verbatim"
    CONSISTENT = "consistent"


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class MrrParams(_Frozen):
    """Microring parameters shared by every ring model.

    Attributes:
        r: Self-coupling coefficient, 0 < r < 1
        a: Single-pass amplitude loss, 0 < a <= 1
        radius_m: Ring radius in meters
        n_eff: Effective refractive index (only used for wavelength -> phase)
        mode: Equation mode
    """

    r: float = Field(0.99, gt=0.0, lt=1.0)
    a: float = Field(0.99, gt=0.0, le=1.0)
    radius_m: float = Field(10e-6, gt=0.0)
    n_eff: float = Field(2.4, gt=0.0)
    mode: EquationMode = EquationMode.CONSISTENT

    def with_mode(self, mode: EquationMode | str) -> "MrrParams":
        return self.model_copy(update={"mode": EquationMode(mode)})


class QuantSpec(_Frozen):
    """Uniform quantization to ``2**bits`` levels over a closed interval."""

    bits: int = Field(7, ge=1, le=16)
    enabled: bool = True

    @property
    def levels(self) -> int:
        return 2**self.bits

    @classmethod
    def off(cls) -> Self:
        return cls(enabled=False)


class DeapBounds(_Frozen):
    """Hardware bounds of one DEAP build.

    Attributes:
        r_m: Maximum kernel edge (R_m); R_m**2 wavelengths per line
        d_m: Maximum channel count (D_m); number of multiplexed lines
        n_conv: Number of parallel convolutional units
        mrr_budget: Modulator MRR budget, R_m**2 * D_m must not exceed it
    """

    r_m: int = Field(10, ge=1)
    d_m: int = Field(10, ge=1)
    n_conv: int = Field(1, ge=1)
    mrr_budget: int = Field(1024, ge=1)

    @model_validator(mode="after")
    def _check_budget(self) -> Self:
        if self.r_m**2 > MAX_WAVELENGTHS:
            raise ValueError(
                f"r_m={self.r_m} needs {self.r_m ** 2} wavelengths per line, limit is {MAX_WAVELENGTHS}"
            )
        if self.r_m**2 * self.d_m > self.mrr_budget:
            raise ValueError(
                f"r_m^2 * d_m = {self.r_m ** 2 * self.d_m} exceeds the MRR budget of {self.mrr_budget}"
            )
        return self

    @property
    def wavelengths(self) -> int:
        return self.r_m**2


CountModel = Literal["symmetric", "literal", "modulator-r2d"]

GPU_POWER_W: Dict[str, float] = {
    "AMD Vega FE": 375.0,
    "AMD MI25": 300.0,
    "NVIDIA Tesla P100": 250.0,
    "NVIDIA GTX 1080 Ti": 250.0,
}


class PerfConfig(_Frozen):
    """Unit powers (W) and throughputs (samples/s) of the analytical model."""

    laser_w: float = Field(0.100, gt=0.0)
    mrr_w: float = Field(0.0195, gt=0.0)
    dac_w: float = Field(0.026, gt=0.0)
    tia_w: float = Field(0.017, gt=0.0)
    adc_w: float = Field(0.076, gt=0.0)

    pd_sps: float = Field(25e9, gt=0.0)
    tia_sps: float = Field(10e9, gt=0.0)
    dac_sps: float = Field(5e9, gt=0.0)
    adc_sps: float = Field(5e9, gt=0.0)
    mrr_mod_sps: float = Field(128e9, gt=0.0)

    mrr_radius_m: float = Field(10e-6, gt=0.0)
    mrr_count_per_path: int = Field(100, ge=1)
    light_speed: float = Field(299792458.0, gt=0.0)

    mrr_budget: int = Field(1024, ge=1)
    count_model: CountModel = "symmetric"

    # Recorded only; memory traffic is not simulated.
    sdram_rate_bps: float = Field(16e9, gt=0.0)
    sdram_bus_bits: int = Field(256, ge=1)

    deap_unit_power_w: float = Field(110.0, gt=0.0)
    gpu_power_w: Dict[str, float] = Field(default_factory=lambda: dict(GPU_POWER_W))

    @field_validator("gpu_power_w")
    @classmethod
    def _positive_powers(cls, value: Dict[str, float]) -> Dict[str, float]:
        bad = [name for name, watts in value.items() if not watts > 0]
        if bad:
            raise ValueError(f"GPU power must be positive: {', '.join(bad)}")
        return value

    @property
    def mean_gpu_power_w(self) -> float:
        return sum(self.gpu_power_w.values()) / len(self.gpu_power_w)


class TrainConfig(_Frozen):
    """Hyperparameters of the reference trainer."""

    lr: float = Field(1e-3, gt=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    batch_size: int = Field(64, ge=1)
    epochs: int = Field(3, ge=1, le=5)
    train_size: Optional[int] = Field(None, ge=1)
    seed: int = 0


class PathsConfig(_Frozen):
    """Files referenced by a run; every path that is set must exist."""

    mnist_dir: Optional[Path] = None
    model: Optional[Path] = None
    deepbench: Optional[Path] = None
    output_dir: Path = Path("deap-out")

    @field_validator("mnist_dir", "model", "deepbench")
    @classmethod
    def _must_exist(cls, value: Optional[Path]) -> Optional[Path]:
        if value is not None and not value.exists():
            raise ValueError(f"path does not exist: {value}")
        return value


class RunConfig(_Frozen):
    """Everything a CLI run needs, as one document."""

    mrr: MrrParams = Field(default_factory=MrrParams)
    bounds: DeapBounds = Field(default_factory=DeapBounds)
    quant: QuantSpec = Field(default_factory=QuantSpec)
    perf: PerfConfig = Field(default_factory=PerfConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)
    seed: int = 0
    threads: Optional[int] = Field(None, ge=1)

    def override(self, **sections: Any) -> "RunConfig":
        """Return a copy with whole sections or scalar fields replaced."""
        return self.model_copy(update={k: v for k, v in sections.items() if v is not None})

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of this config."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _read_toml(path: Path) -> Dict[str, Any]:
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        try:
            import tomli as tomllib
        except ImportError as e:
            raise ConfigurationError(
                "TOML configs on Python 3.10 need the 'toml' extra (tomli)"
            ) from e
    with open(path, "rb") as f:
        return tomllib.load(f)


def load_run_config(path: Path) -> RunConfig:
    """Load and validate a run configuration file.

    Args:
        path: ``.json`` or ``.toml`` document

    Returns:
        Validated RunConfig

    Raises:
        ConfigurationError: If the file is missing, unparseable or invalid
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")

    try:
        if path.suffix.lower() == ".toml":
            data = _read_toml(path)
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, ValueError) as e:
        raise ConfigurationError(f"Cannot parse config {path}: {e}") from e

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid config {path}: {e}") from e

    logger.debug(f"Loaded run config from {path} (digest {config.digest()[:12]})")
    return config


def resolve_threads(configured: Optional[int] = None) -> int:
    """Decide how many worker threads a run may use.

    ``DEAP_SIM_THREADS`` caps the value; without it the configured value or
    the number of physical cores is used.
    """
    cap: Optional[int] = None
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV_VAR}={raw!r}")

    base = configured or psutil.cpu_count(logical=False) or 1
    return min(base, cap) if cap is not None else base
