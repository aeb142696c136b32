"""
Perf - Analytical performance and energy model of a DEAP build.

Key Features:
- Light propagation time through a path of rings
- Throughput chain with named bottleneck(s)
- Per-unit power from component counts (selectable count model)
- Closed-form and integer-pixel convolution runtime estimates
- Comparison report against ingested GPU runtimes
- Acceptance checks for the headline numbers
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .config import CountModel, PerfConfig
from .conv import ConvShape, cycle_count, output_dims
from .errors import ConfigurationError, ContractError


logger = logging.getLogger(__name__)

DEFAULT_PIXEL_TIME_S = 200e-12

# (R, D) points the hardware analysis prices
DESIGN_POINTS: Tuple[Tuple[int, int], ...] = ((3, 113), (10, 12))

# rows of the benchmark parameter table: (W, H, D, N, K, R_w, R_h, S)
BENCHMARK_SHAPES: Tuple[Tuple[int, ...], ...] = (
    (700, 161, 1, 4, 32, 5, 20, 2),
    (112, 112, 64, 8, 128, 3, 3, 1),
    (7, 7, 832, 16, 256, 1, 1, 1),
)


def shape_from_row(w: int, h: int, d: int, n: int, k: int, r_w: int, r_h: int, s: int) -> ConvShape:
    return ConvShape(n=n, h=h, w=w, d=d, r_h=r_h, r_w=r_w, k=k, s=s)


@dataclass(frozen=True)
class GpuRecord:
    """One GPU measurement of one benchmark row.

    ``runtime_s`` is None when the benchmark file left it blank; ``power_w``
    is None when the GPU is not in the configured power table.
    """
    name: str
    power_w: Optional[float]
    runtime_s: Optional[float]

    def __post_init__(self) -> None:
        if self.power_w is not None and not self.power_w > 0:
            raise ContractError(f"{self.name}: power must be positive, got {self.power_w}")
        if self.runtime_s is not None and not self.runtime_s > 0:
            raise ContractError(f"{self.name}: runtime must be positive, got {self.runtime_s}")

    @property
    def energy_j(self) -> Optional[float]:
        if self.power_w is None or self.runtime_s is None:
            return None
        return self.power_w * self.runtime_s


@dataclass
class BenchRow:
    """A convolution shape with the GPU runtimes measured for it."""
    shape: ConvShape
    gpus: List[GpuRecord] = field(default_factory=list)


def propagation_time(k: int, radius_m: Optional[float] = None, cfg: Optional[PerfConfig] = None) -> float:
    """Time for light to pass ``k`` rings of the given radius: k * 2 pi r / c.

    Raises:
        ContractError: If k < 1
    """
    cfg = cfg or PerfConfig()
    if k < 1:
        raise ContractError(f"ring count must be >= 1, got {k}")
    radius = cfg.mrr_radius_m if radius_m is None else radius_m
    return k * 2.0 * math.pi * radius / cfg.light_speed


@dataclass
class ThroughputChain:
    """Throughput of every stage and the resulting system rate.

    Attributes:
        stages: Samples per second of each stage
        samples_per_s: Minimum over the stages
        bottleneck: Names of the stages at the minimum, joined by '/'
    """
    stages: Dict[str, float]
    samples_per_s: float
    bottleneck: str

    @property
    def pixel_time_s(self) -> float:
        return 1.0 / self.samples_per_s

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stages": dict(self.stages),
            "samples_per_s": self.samples_per_s,
            "bottleneck": self.bottleneck,
            "pixel_time_s": self.pixel_time_s,
        }


def system_throughput(cfg: Optional[PerfConfig] = None) -> ThroughputChain:
    """Slowest stage of propagation, photodetection, TIA, DAC, ADC and modulation."""
    cfg = cfg or PerfConfig()
    stages = {
        "propagation": 1.0 / propagation_time(cfg.mrr_count_per_path, cfg.mrr_radius_m, cfg),
        "pd": cfg.pd_sps,
        "tia": cfg.tia_sps,
        "dac": cfg.dac_sps,
        "adc": cfg.adc_sps,
        "mrr_mod": cfg.mrr_mod_sps,
    }
    rate = min(stages.values())
    bottleneck = "/".join(name for name, value in stages.items() if value == rate)
    return ThroughputChain(stages=stages, samples_per_s=rate, bottleneck=bottleneck)


@dataclass
class PowerBreakdown:
    """Power of one convolutional unit.

    Attributes:
        r: Kernel edge R
        d: Channel count D
        count_model: Component-count reading used
        counts: Number of each component
        watts: Power drawn by each component group
        over_budget: R^2 D exceeds the MRR budget
    """
    r: int
    d: int
    count_model: str
    counts: Dict[str, int]
    watts: Dict[str, float]
    over_budget: bool = False

    @property
    def total_w(self) -> float:
        return sum(self.watts.values())

    @property
    def weight_mrrs(self) -> int:
        return self.r * self.r * self.d

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "d": self.d,
            "count_model": self.count_model,
            "counts": dict(self.counts),
            "watts": dict(self.watts),
            "total_w": self.total_w,
            "over_budget": self.over_budget,
        }


def component_counts(r: int, d: int, count_model: CountModel = "symmetric") -> Dict[str, int]:
    """Component counts of one unit under a count model.

    symmetric: R^2 lasers, R^2 D modulator rings each with a DAC, R^2 D weight
    rings each with a DAC, D TIAs and one ADC.
    literal: R^2 lasers, R^2 modulator rings and DACs, R^2 D weight rings.
    modulator-r2d: as symmetric but the weight rings carry no DACs.
    """
    r2 = r * r
    r2d = r2 * d
    if count_model == "symmetric":
        mod, weight_dac = r2d, r2d
    elif count_model == "literal":
        mod, weight_dac = r2, 0
    elif count_model == "modulator-r2d":
        mod, weight_dac = r2d, 0
    else:
        raise ConfigurationError(f"unknown count model {count_model!r}")
    return {
        "laser": r2,
        "modulator_mrr": mod,
        "modulator_dac": mod,
        "weight_mrr": r2d,
        "weight_dac": weight_dac,
        "tia": d,
        "adc": 1,
    }


def unit_power(
    r: int,
    d: int,
    cfg: Optional[PerfConfig] = None,
    *,
    count_model: Optional[CountModel] = None,
    allow_over_budget: bool = False,
) -> PowerBreakdown:
    """Power of one unit sized for kernel edge ``r`` and ``d`` channels.

    Raises:
        ContractError: If r or d is below 1
        ConfigurationError: If R^2 D exceeds the MRR budget and that is not allowed
    """
    cfg = cfg or PerfConfig()
    if r < 1 or d < 1:
        raise ContractError(f"r and d must be >= 1, got r={r}, d={d}")
    model = count_model or cfg.count_model
    over = r * r * d > cfg.mrr_budget
    if over and not allow_over_budget:
        raise ConfigurationError(
            f"R^2 D = {r * r * d} MRRs exceeds the budget of {cfg.mrr_budget}"
        )

    counts = component_counts(r, d, model)
    price = {
        "laser": cfg.laser_w,
        "modulator_mrr": cfg.mrr_w,
        "modulator_dac": cfg.dac_w,
        "weight_mrr": cfg.mrr_w,
        "weight_dac": cfg.dac_w,
        "tia": cfg.tia_w,
        "adc": cfg.adc_w,
    }
    watts = {name: count * price[name] for name, count in counts.items()}
    return PowerBreakdown(r=r, d=d, count_model=model, counts=counts, watts=watts, over_budget=over)


def design_point_power(cfg: Optional[PerfConfig] = None) -> List[PowerBreakdown]:
    """Unit power at the small-kernel and large-kernel design points.

    The large-kernel point needs 1200 rings; it is priced anyway and flagged.
    """
    cfg = cfg or PerfConfig()
    rows = []
    for r, d in DESIGN_POINTS:
        row = unit_power(r, d, cfg, allow_over_budget=True)
        if row.over_budget:
            logger.warning(
                f"R={r}, D={d} needs {row.weight_mrrs} MRRs, over the budget of {cfg.mrr_budget}"
            )
        rows.append(row)
    return rows


def _check_n_conv(n_conv: int) -> None:
    if n_conv < 1:
        raise ContractError(f"n_conv must be >= 1, got {n_conv}")


def estimate_runtime(
    shape: ConvShape, n_conv: int = 1, pixel_time_s: float = DEFAULT_PIXEL_TIME_S
) -> float:
    """Closed-form convolution time, real-valued factors and no rounding:

    t = pixel_time * (N K / n_conv) * ((H - R_h) / S + 1) * ((W - R_w) / S + 1)
    """
    _check_n_conv(n_conv)
    rows = (shape.h - shape.kernel_h) / shape.s + 1
    cols = (shape.w - shape.kernel_w) / shape.s + 1
    return pixel_time_s * (shape.n * shape.k / n_conv) * rows * cols


def estimate_runtime_integer(
    shape: ConvShape, n_conv: int = 1, pixel_time_s: float = DEFAULT_PIXEL_TIME_S
) -> float:
    """Runtime from the engine's cycle law: N K ceil(P / n_conv) pixel times."""
    _check_n_conv(n_conv)
    pixels = output_dims(shape).sim_pixels
    return shape.n * cycle_count(shape.k, pixels, n_conv) * pixel_time_s


def energy_per_convolution(power_w: float, runtime_s: float) -> float:
    return power_w * runtime_s


@dataclass
class ReportRow:
    """Comparison of one benchmark row.

    Attributes:
        shape: Convolution parameters
        deap_runtime_s: Closed-form estimate per n_conv
        deap_runtime_int_s: Integer-pixel estimate per n_conv
        deap_energy_j: DEAP energy per n_conv (n_conv units at unit power)
        gpus: GPU records of this row
        speedup: GPU runtime / DEAP runtime, keyed by (gpu, n_conv)
        flags: Missing-data notes
    """
    shape: ConvShape
    deap_runtime_s: Dict[int, float]
    deap_runtime_int_s: Dict[int, float]
    deap_energy_j: Dict[int, float]
    gpus: List[GpuRecord]
    speedup: Dict[Tuple[str, int], Optional[float]]
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        s = self.shape
        return {
            "shape": {"w": s.w, "h": s.h, "d": s.d, "n": s.n, "k": s.k, "r_w": s.kernel_w, "r_h": s.kernel_h, "s": s.s},
            "deap_runtime_s": {str(n): v for n, v in self.deap_runtime_s.items()},
            "deap_runtime_int_s": {str(n): v for n, v in self.deap_runtime_int_s.items()},
            "deap_energy_j": {str(n): v for n, v in self.deap_energy_j.items()},
            "gpus": [
                {"name": g.name, "power_w": g.power_w, "runtime_s": g.runtime_s, "energy_j": g.energy_j}
                for g in self.gpus
            ],
            "speedup": {f"{gpu}@{n}": v for (gpu, n), v in self.speedup.items()},
            "flags": list(self.flags),
        }


@dataclass
class ComparisonReport:
    """DEAP estimates against GPU runtimes for every benchmark row.

    ``energy_ratio`` maps n_conv to n_conv * unit power / mean GPU power,
    the energy DEAP spends relative to an average GPU over equal time.
    """
    rows: List[ReportRow]
    n_conv: List[int]
    deap_unit_power_w: float
    mean_gpu_power_w: float
    pixel_time_s: float
    energy_ratio: Dict[int, float]
    flags: List[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.flags

    def speedup_range(self, n_conv: int) -> Optional[Tuple[float, float]]:
        """Smallest and largest speedup over all rows and GPUs for ``n_conv`` units."""
        values = [
            v for row in self.rows for (_, n), v in row.speedup.items() if n == n_conv and v is not None
        ]
        if not values:
            return None
        return min(values), max(values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_conv": list(self.n_conv),
            "deap_unit_power_w": self.deap_unit_power_w,
            "mean_gpu_power_w": self.mean_gpu_power_w,
            "pixel_time_s": self.pixel_time_s,
            "energy_ratio": {str(n): v for n, v in self.energy_ratio.items()},
            "speedup_range": {str(n): self.speedup_range(n) for n in self.n_conv},
            "rows": [row.to_dict() for row in self.rows],
            "flags": list(self.flags),
        }

    def csv_rows(self) -> List[Dict[str, Any]]:
        """One flat record per (row, GPU, n_conv); rows without GPUs get one record per n_conv."""
        out: List[Dict[str, Any]] = []
        for index, row in enumerate(self.rows):
            s = row.shape
            base = {
                "row": index, "w": s.w, "h": s.h, "d": s.d, "n": s.n, "k": s.k,
                "r_w": s.kernel_w, "r_h": s.kernel_h, "s": s.s,
            }
            gpus: Sequence[Optional[GpuRecord]] = row.gpus or [None]
            for gpu in gpus:
                for n in self.n_conv:
                    out.append({
                        **base,
                        "gpu": gpu.name if gpu else "",
                        "gpu_runtime_s": gpu.runtime_s if gpu else None,
                        "gpu_energy_j": gpu.energy_j if gpu else None,
                        "n_conv": n,
                        "deap_runtime_s": row.deap_runtime_s[n],
                        "deap_runtime_int_s": row.deap_runtime_int_s[n],
                        "deap_energy_j": row.deap_energy_j[n],
                        "speedup": row.speedup.get((gpu.name, n)) if gpu else None,
                    })
        return out


REPORT_CSV_FIELDS = [
    "row", "w", "h", "d", "n", "k", "r_w", "r_h", "s", "gpu", "gpu_runtime_s", "gpu_energy_j",
    "n_conv", "deap_runtime_s", "deap_runtime_int_s", "deap_energy_j", "speedup",
]


def compare_report(
    rows: Sequence[BenchRow],
    n_conv: Sequence[int] = (1,),
    cfg: Optional[PerfConfig] = None,
    pixel_time_s: float = DEFAULT_PIXEL_TIME_S,
) -> ComparisonReport:
    """Estimate every row on DEAP and compare against its GPU runtimes.

    Missing runtimes or unknown GPU powers do not stop the report; the
    affected entries are None and a flag names them.
    """
    cfg = cfg or PerfConfig()
    counts = sorted(set(n_conv))
    if not counts:
        raise ContractError("need at least one n_conv value")
    for n in counts:
        _check_n_conv(n)

    mean_gpu = cfg.mean_gpu_power_w
    report_rows: List[ReportRow] = []
    all_flags: List[str] = []

    for index, bench in enumerate(rows):
        est = {n: estimate_runtime(bench.shape, n, pixel_time_s) for n in counts}
        est_int = {n: estimate_runtime_integer(bench.shape, n, pixel_time_s) for n in counts}
        energy = {n: energy_per_convolution(n * cfg.deap_unit_power_w, est[n]) for n in counts}
        speedup: Dict[Tuple[str, int], Optional[float]] = {}
        flags: List[str] = []
        if not bench.gpus:
            flags.append(f"row {index}: no GPU data")
        for gpu in bench.gpus:
            if gpu.runtime_s is None:
                flags.append(f"row {index}: missing runtime for {gpu.name}")
            if gpu.power_w is None:
                flags.append(f"row {index}: unknown power for {gpu.name}")
            for n in counts:
                speedup[(gpu.name, n)] = gpu.runtime_s / est[n] if gpu.runtime_s is not None else None
        for flag in flags:
            logger.warning(flag)
        all_flags.extend(flags)
        report_rows.append(ReportRow(
            shape=bench.shape,
            deap_runtime_s=est,
            deap_runtime_int_s=est_int,
            deap_energy_j=energy,
            gpus=list(bench.gpus),
            speedup=speedup,
            flags=flags,
        ))

    return ComparisonReport(
        rows=report_rows,
        n_conv=counts,
        deap_unit_power_w=cfg.deap_unit_power_w,
        mean_gpu_power_w=mean_gpu,
        pixel_time_s=pixel_time_s,
        energy_ratio={n: n * cfg.deap_unit_power_w / mean_gpu for n in counts},
        flags=all_flags,
    )


@dataclass
class CheckResult:
    """Measured value against an expected one within a tolerance."""
    name: str
    measured: float
    expected: float
    tolerance: float
    relative: bool = True
    note: str = ""

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.measured):
            return False
        allowed = self.tolerance * abs(self.expected) if self.relative else self.tolerance
        return abs(self.measured - self.expected) <= allowed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "relative": self.relative,
            "passed": self.passed,
            "note": self.note,
        }


def acceptance_checks(cfg: Optional[PerfConfig] = None) -> List[CheckResult]:
    """Headline numbers of the analysis evaluated under ``cfg``."""
    cfg = cfg or PerfConfig()
    t_prop = propagation_time(cfg.mrr_count_per_path, cfg.mrr_radius_m, cfg)
    chain = system_throughput(cfg)
    small, large = design_point_power(cfg)
    row3 = shape_from_row(*BENCHMARK_SHAPES[2])
    bottleneck = set(chain.bottleneck.split("/"))

    return [
        CheckResult("propagation time (s)", t_prop, 21e-12, 0.05),
        CheckResult("propagation-limited throughput (S/s)", 1.0 / t_prop, 50e9, 0.10),
        CheckResult("system throughput (S/s)", chain.samples_per_s, 5e9, 1e-12, note=chain.bottleneck),
        CheckResult(
            "DAC/ADC bottleneck", float(bottleneck == {"dac", "adc"}), 1.0, 0.0, relative=False,
            note=chain.bottleneck,
        ),
        CheckResult("pixel time (s)", chain.pixel_time_s, DEFAULT_PIXEL_TIME_S, 1e-12),
        CheckResult("unit power R=3 D=113 (W)", small.total_w, 95.0, 0.10),
        CheckResult(
            "unit power R=10 D=12 (W)", large.total_w, 112.0, 0.15,
            note="over MRR budget" if large.over_budget else "",
        ),
        CheckResult(
            "runtime 7x7x832 N=16 K=256 (s)",
            estimate_runtime(row3, 1, chain.pixel_time_s),
            DEFAULT_PIXEL_TIME_S * 16 * 256 * 49,
            1e-9,
        ),
        CheckResult(
            "energy ratio vs mean GPU", cfg.deap_unit_power_w / cfg.mean_gpu_power_w, 0.37, 0.01,
            relative=False,
        ),
    ]
