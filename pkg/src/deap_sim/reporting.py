"""
Reporting - CSV, JSON and SVG writers for run outputs.

Writers take plain records and always emit the same bytes for the same
records. SVG figures need the ``plot`` extra (matplotlib).
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from .device import DeviceCurve
from .errors import ConfigurationError
from .perf import REPORT_CSV_FIELDS, ComparisonReport


logger = logging.getLogger(__name__)


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return value


def write_csv(path: Path, fieldnames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})
    return path


def write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_device_curve(path: Path, curve: DeviceCurve) -> Path:
    return write_csv(path, curve.columns, curve.rows())


def write_comparison(directory: Path, report: ComparisonReport, stem: str = "bench") -> List[Path]:
    """Write ``<stem>.csv`` and ``<stem>.json`` for a comparison report."""
    return [
        write_csv(directory / f"{stem}.csv", REPORT_CSV_FIELDS, report.csv_rows()),
        write_json(directory / f"{stem}.json", report.to_dict()),
    ]


def _pyplot() -> Any:
    try:
        import matplotlib
    except ImportError as e:
        raise ConfigurationError("SVG output needs matplotlib; install the 'plot' extra") from e
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "deap-sim"
    import matplotlib.pyplot as plt

    return plt


def _save_svg(fig: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    return path


def plot_device_curve(path: Path, curve: DeviceCurve) -> Path:
    """Transmission of the three ring transfers against phase."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(curve.phi, curve.t_n, label="all-pass $T_n$")
    ax.plot(curve.phi, curve.t_p, label="through $T_p$")
    ax.plot(curve.phi, curve.t_d, label="drop $T_d$")
    if curve.balanced is not None:
        ax.plot(curve.phi, curve.balanced, "--", label="balanced")
    ax.set_xlabel("phase (rad)")
    ax.set_ylabel("transmission")
    ax.set_title(f"MRR transfer functions ({curve.mode.value})")
    ax.legend()
    ax.grid(True, alpha=0.3)
    try:
        return _save_svg(fig, path)
    finally:
        plt.close(fig)


def plot_comparison(path: Path, report: ComparisonReport) -> Path:
    """Grouped log-scale bars of DEAP and GPU runtimes per benchmark row."""
    plt = _pyplot()
    labels = [f"row {i}" for i in range(len(report.rows))]
    series: Dict[str, List[float]] = {}
    for n in report.n_conv:
        series[f"DEAP x{n}"] = [row.deap_runtime_s[n] for row in report.rows]
    gpu_names: List[str] = []
    for row in report.rows:
        for gpu in row.gpus:
            if gpu.name not in gpu_names:
                gpu_names.append(gpu.name)
    for name in gpu_names:
        values = []
        for row in report.rows:
            match = next((g for g in row.gpus if g.name == name), None)
            values.append(match.runtime_s if match and match.runtime_s is not None else np.nan)
        series[name] = values

    fig, ax = plt.subplots(figsize=(9, 4.5))
    x = np.arange(len(labels))
    width = 0.8 / max(len(series), 1)
    for i, (name, values) in enumerate(series.items()):
        ax.bar(x + i * width, values, width, label=name)
    ax.set_xticks(x + width * (len(series) - 1) / 2)
    ax.set_xticklabels(labels)
    ax.set_yscale("log")
    ax.set_ylabel("runtime (s)")
    ax.set_title("Estimated DEAP runtime against GPU runtime")
    ax.legend(fontsize="small")
    try:
        return _save_svg(fig, path)
    finally:
        plt.close(fig)
