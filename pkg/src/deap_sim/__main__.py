"""
deap-sim CLI - Reproducible experiments on the simulated photonic accelerator.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
import numpy as np
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from . import __version__
from .config import EquationMode, QuantSpec, RunConfig, load_run_config, resolve_threads
from .errors import AcceptanceError, ContractError, DeapSimError
from .manifest import RunManifest


console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger("deap_sim")

_OVERRIDES_KEY = "deap_sim.overrides"


# ---------------------------------------------------------------------------
# Global options and run state
# ---------------------------------------------------------------------------

def _remember(ctx: click.Context, param: click.Parameter, value: Any) -> Any:
    # global flags may be given before or after the subcommand; the last one wins
    if value is not None and value is not False:
        ctx.find_root().meta.setdefault(_OVERRIDES_KEY, {})[param.name] = value
    return value


_GLOBAL_OPTIONS = [
    click.option("--config", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                 expose_value=False, callback=_remember, help="Run configuration (.json or .toml)"),
    click.option("--seed", type=int, expose_value=False, callback=_remember, help="Seed for every random choice"),
    click.option("--mode", type=click.Choice([m.value for m in EquationMode]), expose_value=False,
                 callback=_remember, help="Ring equation mode"),
    click.option("--quant-bits", type=click.IntRange(0, 16), expose_value=False, callback=_remember,
                 help="Quantization bits; 0 turns quantization off"),
    click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), expose_value=False,
                 callback=_remember, help="Directory for outputs"),
    click.option("-v", "--verbose", is_flag=True, expose_value=False, callback=_remember,
                 help="Debug logging"),
    click.option("-q", "--quiet", is_flag=True, expose_value=False, callback=_remember,
                 help="Errors only"),
]


def global_options(f: Callable[..., Any]) -> Callable[..., Any]:
    for option in reversed(_GLOBAL_OPTIONS):
        f = option(f)
    return f


@dataclass
class RunState:
    """Effective configuration of one CLI invocation."""
    config: RunConfig
    output_dir: Path
    threads: int
    config_path: Optional[Path] = None


def _setup_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.WARNING
    root = logging.getLogger("deap_sim")
    root.handlers.clear()
    handler = RichHandler(console=err_console, show_time=False, show_path=False, markup=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(handler)
    root.setLevel(level)


def _state(ctx: click.Context) -> RunState:
    root = ctx.find_root()
    cached = root.meta.get("deap_sim.state")
    if cached is not None:
        return cached

    opts: Dict[str, Any] = root.meta.get(_OVERRIDES_KEY, {})
    _setup_logging(bool(opts.get("verbose")), bool(opts.get("quiet")))

    config_path = opts.get("config")
    config = load_run_config(config_path) if config_path else RunConfig()

    if opts.get("mode"):
        config = config.override(mrr=config.mrr.with_mode(opts["mode"]))
    if opts.get("quant_bits") is not None:
        bits = opts["quant_bits"]
        config = config.override(quant=QuantSpec.off() if bits == 0 else QuantSpec(bits=bits))
    if opts.get("seed") is not None:
        seed = opts["seed"]
        config = config.override(seed=seed, train=config.train.model_copy(update={"seed": seed}))

    output_dir = Path(opts.get("output_dir") or config.paths.output_dir)
    state = RunState(
        config=config, output_dir=output_dir, threads=resolve_threads(config.threads), config_path=config_path
    )
    root.meta["deap_sim.state"] = state
    logger.debug(f"config digest {config.digest()[:12]}, {state.threads} threads, output {output_dir}")
    return state


class _Run:
    """Output directory and manifest of one subcommand."""

    def __init__(self, state: RunState, command: str, arguments: Dict[str, Any]):
        self.state = state
        self.directory = state.output_dir / command
        self.directory.mkdir(parents=True, exist_ok=True)
        self.files: List[Path] = []
        self.manifest = RunManifest(
            command=command,
            arguments={k: (str(v) if isinstance(v, Path) else v) for k, v in arguments.items()},
            config_digest=state.config.digest(),
            seed=state.config.seed,
        )
        self.manifest.add_input(state.config_path)

    def path(self, name: str) -> Path:
        return self.directory / name

    def add(self, *paths: Path) -> None:
        self.files.extend(paths)

    def finish(self) -> None:
        self.manifest.record_outputs(self.directory, self.files)
        self.manifest.write(self.directory)
        console.print(f"[dim]Wrote {len(self.files)} file(s) to {escape(str(self.directory))}[/dim]")


def _floats(text: str, what: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()], dtype=float)
    except ValueError as e:
        raise ContractError(f"cannot parse {what}: {text!r}") from e


def _ints(text: str, what: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise ContractError(f"cannot parse {what}: {text!r}") from e


class DeapGroup(click.Group):
    """Maps structured errors onto exit codes: acceptance failures 2, everything else 1."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except AcceptanceError as e:
            err_console.print(f"[red]Acceptance failed:[/red] {escape(str(e))}")
            for failure in e.failures:
                err_console.print(f"  [red]x[/red] {escape(failure)}")
            ctx.exit(2)
        except DeapSimError as e:
            err_console.print(f"[red]Error:[/red] {escape(str(e))}")
            ctx.exit(1)


@click.group(cls=DeapGroup)
@global_options
@click.version_option(version=__version__, prog_name="deap-sim")
def cli() -> None:
    """deap-sim - Photonic CNN accelerator simulator.

    Common workflows:
      deap-sim device-curve --svg           # Ring transfer functions
      deap-sim convolve --random 12,12,3,3,4
      deap-sim train --mnist-dir data/      # Offline reference training
      deap-sim evaluate --model m.json --mnist-dir data/ --check
      deap-sim bench --deepbench fixtures/deepbench_conv.csv --n-conv 1,2
      deap-sim report --check               # Hardware analysis as a gate
    """


# ---------------------------------------------------------------------------
# device-curve
# ---------------------------------------------------------------------------

@cli.command(name="device-curve")
@global_options
@click.option("--samples", type=click.IntRange(2), default=1000, show_default=True, help="Phase samples over [0, 2 pi]")
@click.option("--balanced", is_flag=True, help="Add the balanced detector column g (T_d - T_p)")
@click.option("--gain", type=float, default=1.0, show_default=True, help="Balanced detector gain")
@click.option("--svg", is_flag=True, help="Also write an SVG plot (needs matplotlib)")
@click.pass_context
def device_curve(ctx: click.Context, samples: int, balanced: bool, gain: float, svg: bool) -> None:
    """Sample T_n, T_p and T_d over one phase period and write them as CSV."""
    from .device import intensity_interval, sample_curves, weight_interval
    from .reporting import plot_device_curve, write_device_curve

    state = _state(ctx)
    run = _Run(state, "device-curve", {"samples": samples, "balanced": balanced, "gain": gain, "svg": svg})
    p = state.config.mrr
    curve = sample_curves(p, samples, balanced_gain=gain if balanced else None)
    run.add(write_device_curve(run.path("device_curve.csv"), curve))
    if svg:
        run.add(plot_device_curve(run.path("device_curve.svg"), curve))

    lo_n, hi_n = intensity_interval(p)
    lo_w, hi_w = weight_interval(p)
    table = Table(title=f"Ring r={p.r} a={p.a} ({p.mode.value})", box=box.ROUNDED)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("samples", str(samples))
    table.add_row("all-pass intensity interval", f"[{lo_n:.6g}, {hi_n:.6g}]")
    table.add_row("realizable weight interval", f"[{lo_w:.6g}, {hi_w:.6g}]")
    table.add_row("non-physical samples", str(curve.nonphysical))
    console.print(table)
    run.finish()


# ---------------------------------------------------------------------------
# dot
# ---------------------------------------------------------------------------

@cli.command()
@global_options
@click.option("--weights", required=True, help="Comma-separated weights F_i")
@click.option("--inputs", required=True, help="Comma-separated envelopes in [0, 1] (or signed inputs with --signed)")
@click.option("--signed", is_flag=True, help="Inputs lie in [-1, 1] and use the (x + 1) / 2 encoding")
@click.option("--fast", is_flag=True, help="Skip the ring inversion/forward pair")
@click.option("--modulator", is_flag=True, help="Realize envelopes through all-pass modulator rings")
@click.pass_context
def dot(ctx: click.Context, weights: str, inputs: str, signed: bool, fast: bool, modulator: bool) -> None:
    """One photonic weight bank dot product against the exact value."""
    from .reporting import write_json
    from .weight_bank import PwbConfig, pwb_dot, signed_pwb_dot

    state = _state(ctx)
    w = _floats(weights, "weights")
    x = _floats(inputs, "inputs")
    run = _Run(state, "dot", {"weights": weights, "inputs": inputs, "signed": signed, "fast": fast,
                              "modulator": modulator})
    cfg = PwbConfig(weights_f=w, params=state.config.mrr, quant=state.config.quant, fast=fast,
                    modulator_path=modulator)
    value = signed_pwb_dot(x, cfg) if signed else pwb_dot(x, cfg)
    exact = float(np.dot(x, w))

    result = {"photonic": value, "exact": exact, "abs_error": abs(value - exact), "signed": signed}
    run.add(write_json(run.path("dot.json"), result))
    console.print(f"photonic {value:.9g}  exact {exact:.9g}  |error| {abs(value - exact):.3g}")
    run.finish()


# ---------------------------------------------------------------------------
# convolve
# ---------------------------------------------------------------------------

@cli.command()
@global_options
@click.option("--image", "image_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="H x W x D tensor JSON with values in [0, 1]")
@click.option("--kernels", "kernels_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="R x R x D x K tensor JSON")
@click.option("--random", "random_shape", help="H,W,D,R,K for a seeded random instance instead of files")
@click.option("--stride", type=click.IntRange(1), default=1, show_default=True)
@click.option("--pad", type=click.IntRange(0), default=0, show_default=True, help="Zero padding per side")
@click.option("--n-conv", type=click.IntRange(1), default=None, help="Parallel units (default from config)")
@click.option("--fast", is_flag=True, help="Skip the ring inversion/forward pair")
@click.pass_context
def convolve(
    ctx: click.Context,
    image_path: Optional[Path],
    kernels_path: Optional[Path],
    random_shape: Optional[str],
    stride: int,
    pad: int,
    n_conv: Optional[int],
    fast: bool,
) -> None:
    """Convolve on simulated DEAP hardware and compare with the digital reference."""
    from .conv import ConvShape, deap_convolve, oracle_convolve, zero_pad
    from .io import load_tensor, save_tensor
    from .reporting import write_json

    state = _state(ctx)
    cfg = state.config
    if random_shape:
        dims = _ints(random_shape, "--random")
        if len(dims) != 5:
            raise ContractError("--random needs H,W,D,R,K")
        h, w, d, r, k = dims
        rng = np.random.default_rng(cfg.seed)
        image = rng.random((h, w, d))
        kernels = rng.uniform(-1.0, 1.0, size=(r, r, d, k))
    elif image_path and kernels_path:
        image = load_tensor(image_path)
        kernels = load_tensor(kernels_path)
    else:
        raise ContractError("give --image and --kernels, or --random")

    run = _Run(state, "convolve", {"image": image_path, "kernels": kernels_path, "random": random_shape,
                                   "stride": stride, "pad": pad, "n_conv": n_conv, "fast": fast})
    run.manifest.add_input(image_path)
    run.manifest.add_input(kernels_path)

    padded = zero_pad(image, pad)
    bounds = cfg.bounds if n_conv is None else cfg.bounds.model_copy(update={"n_conv": n_conv})
    shape = ConvShape.for_tensors(padded, kernels, s=stride)
    result = deap_convolve(padded, kernels, shape, bounds, cfg.quant, cfg.mrr, fast=fast, threads=state.threads)
    reference = oracle_convolve(padded, kernels, stride)
    max_err = float(np.max(np.abs(result.output - reference)))

    save_tensor(run.path("output.json"), result.output)
    summary = {**result.to_dict(), "max_abs_error": max_err, "quantized": cfg.quant.enabled}
    run.add(run.path("output.json"), write_json(run.path("convolve.json"), summary))

    table = Table(title="DEAP convolution", box=box.ROUNDED)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("output shape", "x".join(str(s) for s in result.output.shape))
    table.add_row("pixels per kernel", str(result.pixels_per_kernel))
    table.add_row("cycles", f"{result.cycles} on {result.n_conv} unit(s)")
    table.add_row("max |error| vs reference", f"{max_err:.3g}")
    console.print(table)
    run.finish()


# ---------------------------------------------------------------------------
# train / infer / evaluate
# ---------------------------------------------------------------------------

def _mnist_dir(state: RunState, given: Optional[Path]) -> Path:
    directory = given or state.config.paths.mnist_dir
    if directory is None:
        raise ContractError("no MNIST directory: pass --mnist-dir or set paths.mnist_dir")
    return Path(directory)


def _model_path(state: RunState, given: Optional[Path]) -> Path:
    path = given or state.config.paths.model
    if path is None:
        raise ContractError("no model file: pass --model or set paths.model")
    return Path(path)


_MNIST_OPTION = click.option("--mnist-dir", type=click.Path(exists=True, file_okay=False, path_type=Path),
                             help="Directory holding the MNIST IDX files")
_MODEL_OPTION = click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                             help="Model JSON file")
_BACKEND_OPTION = click.option("--backend", type=click.Choice(["photonic", "digital"]), default="photonic",
                               show_default=True)


@cli.command()
@global_options
@_MNIST_OPTION
@click.option("--epochs", type=click.IntRange(1, 5), default=None, help="Epochs (default from config)")
@click.option("--train-size", type=click.IntRange(1), default=None, help="Use only the first N training images")
@click.option("--holdout", type=click.IntRange(0), default=500, show_default=True, help="Test images scored after training")
@click.pass_context
def train(
    ctx: click.Context, mnist_dir: Optional[Path], epochs: Optional[int], train_size: Optional[int], holdout: int
) -> None:
    """Train the reference CNN offline and write model.json."""
    from .cnn.trainer import train_reference
    from .io import load_mnist_dir, save_model
    from .io.mnist import split_paths
    from .reporting import write_json

    state = _state(ctx)
    directory = _mnist_dir(state, mnist_dir)
    updates = {k: v for k, v in {"epochs": epochs, "train_size": train_size}.items() if v is not None}
    train_cfg = state.config.train.model_copy(update=updates)

    run = _Run(state, "train", {"mnist_dir": directory, "epochs": train_cfg.epochs,
                                "train_size": train_cfg.train_size, "holdout": holdout})
    for path in split_paths(directory, "train"):
        run.manifest.add_input(path)
    train_set = load_mnist_dir(directory, "train")
    holdout_set = load_mnist_dir(directory, "test", limit=holdout) if holdout else None

    with console.status("Training..."):
        result = train_reference(train_set, train_cfg, holdout_set)

    save_model(run.path("model.json"), result.model)
    run.add(run.path("model.json"), write_json(run.path("train.json"), result.to_dict()))
    if result.holdout_accuracy is not None:
        console.print(f"held-out digital accuracy: [green]{result.holdout_accuracy:.4f}[/green]")
    run.finish()


@cli.command()
@global_options
@_MODEL_OPTION
@_MNIST_OPTION
@click.option("--index", type=click.IntRange(0), default=0, show_default=True, help="Test image index")
@click.option("--image", "image_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="28 x 28 x 1 tensor JSON instead of an MNIST image")
@_BACKEND_OPTION
@click.pass_context
def infer(
    ctx: click.Context,
    model_path: Optional[Path],
    mnist_dir: Optional[Path],
    index: int,
    image_path: Optional[Path],
    backend: str,
) -> None:
    """Classify one image and report per-layer shapes and hardware cycles."""
    from .cnn.runtime import deap_infer_traced
    from .io import load_model, load_mnist_dir, load_tensor
    from .reporting import write_json

    state = _state(ctx)
    cfg = state.config
    model_file = _model_path(state, model_path)
    model = load_model(model_file)
    label: Optional[int] = None
    if image_path is not None:
        image = load_tensor(image_path)
    else:
        dataset = load_mnist_dir(_mnist_dir(state, mnist_dir), "test", limit=index + 1)
        if index >= len(dataset):
            raise ContractError(f"test set has only {len(dataset)} images")
        image = dataset.image(index)
        label = int(dataset.labels[index])

    run = _Run(state, "infer", {"model": model_file, "index": index, "image": image_path, "backend": backend})
    run.manifest.add_input(model_file)
    run.manifest.add_input(image_path)

    trace = deap_infer_traced(model, image, cfg.bounds, cfg.quant, backend, cfg.mrr)
    record = {**trace.to_dict(), "label": label, "backend": backend}
    run.add(write_json(run.path("infer.json"), record))

    table = Table(title=f"Inference ({backend})", box=box.SIMPLE)
    table.add_column("Stage", style="cyan")
    table.add_column("Shape", style="green")
    table.add_column("Cycles", style="yellow")
    for stage, shape in trace.shapes:
        table.add_row(stage, "x".join(str(s) for s in shape), str(trace.cycles.get(stage, "")))
    console.print(table)
    suffix = f" (label {label})" if label is not None else ""
    console.print(f"prediction [bold]{trace.prediction}[/bold]{suffix}, "
                  f"hardware time {trace.hardware_time_s * 1e9:.1f} ns")
    run.finish()


@cli.command()
@global_options
@_MODEL_OPTION
@_MNIST_OPTION
@_BACKEND_OPTION
@click.option("--test-size", type=click.IntRange(1), default=500, show_default=True)
@click.option("--check", is_flag=True, help="Gate on accuracy and on the photonic/digital gap (exit 2)")
@click.option("--min-accuracy", type=click.FloatRange(0, 1), default=0.965, show_default=True)
@click.option("--max-gap", type=click.FloatRange(0, 1), default=0.015, show_default=True)
@click.pass_context
def evaluate(
    ctx: click.Context,
    model_path: Optional[Path],
    mnist_dir: Optional[Path],
    backend: str,
    test_size: int,
    check: bool,
    min_accuracy: float,
    max_gap: float,
) -> None:
    """Accuracy of a model on the first N test images."""
    from .cnn.runtime import evaluate as evaluate_model
    from .io import load_model, load_mnist_dir
    from .reporting import write_json

    state = _state(ctx)
    cfg = state.config
    model_file = _model_path(state, model_path)
    model = load_model(model_file)
    dataset = load_mnist_dir(_mnist_dir(state, mnist_dir), "test", limit=test_size)

    run = _Run(state, "evaluate", {"model": model_file, "backend": backend, "test_size": test_size,
                                   "check": check, "min_accuracy": min_accuracy, "max_gap": max_gap})
    run.manifest.add_input(model_file)

    accuracy = {backend: evaluate_model(model, dataset, backend, cfg.quant, cfg.bounds, cfg.mrr, state.threads)}
    if check and backend == "photonic":
        accuracy["digital"] = evaluate_model(model, dataset, "digital", cfg.quant, cfg.bounds, cfg.mrr, state.threads)

    quant_bits = cfg.quant.bits if cfg.quant.enabled else 0
    record: Dict[str, Any] = {"images": len(dataset), "accuracy": accuracy, "quant_bits": quant_bits}
    failures: List[str] = []
    if check:
        if accuracy[backend] < min_accuracy:
            failures.append(f"{backend} accuracy {accuracy[backend]:.4f} < {min_accuracy}")
        if "digital" in accuracy:
            gap = abs(accuracy["photonic"] - accuracy["digital"])
            record["gap"] = gap
            if gap > max_gap:
                failures.append(f"photonic/digital gap {gap:.4f} > {max_gap}")
        record["passed"] = not failures
    run.add(write_json(run.path("evaluate.json"), record))

    for name, value in accuracy.items():
        console.print(f"{name} accuracy on {len(dataset)} images: [green]{value:.4f}[/green]")
    run.finish()
    if failures:
        raise AcceptanceError("evaluation gate failed", failures)


# ---------------------------------------------------------------------------
# bench / power / report
# ---------------------------------------------------------------------------

def _checks_table(checks: Sequence[Any]) -> Table:
    table = Table(title="Acceptance checks", box=box.ROUNDED)
    table.add_column("Check", style="cyan")
    table.add_column("Measured", style="green")
    table.add_column("Expected", style="blue")
    table.add_column("Result")
    for c in checks:
        tol = f"±{c.tolerance:.0%}" if c.relative and c.tolerance >= 0.01 else f"±{c.tolerance:g}"
        table.add_row(c.name, f"{c.measured:.6g}", f"{c.expected:.6g} {tol}",
                      "[green]+ pass[/green]" if c.passed else "[red]x fail[/red]")
    return table


def _gate(checks: Sequence[Any]) -> None:
    failed = [f"{c.name}: {c.measured:.6g} vs {c.expected:.6g}" for c in checks if not c.passed]
    if failed:
        raise AcceptanceError(f"{len(failed)} of {len(checks)} checks failed", failed)


@cli.command()
@global_options
@click.option("--deepbench", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Benchmark CSV (default from config)")
@click.option("--n-conv", "n_conv", default="1", show_default=True, help="Comma-separated unit counts")
@click.option("--check", is_flag=True, help="Also run the acceptance checks (exit 2 on failure)")
@click.option("--svg", is_flag=True, help="Also write a runtime bar chart (needs matplotlib)")
@click.pass_context
def bench(ctx: click.Context, deepbench: Optional[Path], n_conv: str, check: bool, svg: bool) -> None:
    """Estimate benchmark rows on DEAP and compare with GPU runtimes."""
    from .io import load_deepbench
    from .perf import acceptance_checks, compare_report, system_throughput
    from .reporting import plot_comparison, write_comparison, write_json

    state = _state(ctx)
    perf = state.config.perf
    path = deepbench or state.config.paths.deepbench
    if path is None:
        raise ContractError("no benchmark file: pass --deepbench or set paths.deepbench")
    counts = _ints(n_conv, "--n-conv")

    run = _Run(state, "bench", {"deepbench": path, "n_conv": counts, "check": check, "svg": svg})
    run.manifest.add_input(Path(path))
    rows = load_deepbench(path, perf)
    chain = system_throughput(perf)
    report = compare_report(rows, counts, perf, chain.pixel_time_s)
    run.add(*write_comparison(run.directory, report))
    if svg:
        run.add(plot_comparison(run.path("bench.svg"), report))

    table = Table(title=f"DEAP vs GPU ({chain.pixel_time_s * 1e12:.0f} ps per pixel)", box=box.ROUNDED)
    table.add_column("Row", style="cyan")
    for n in report.n_conv:
        table.add_column(f"DEAP x{n} (s)", style="green")
    table.add_column("GPU", style="blue")
    table.add_column("GPU (s)", style="blue")
    table.add_column("Speedup", style="yellow")
    for i, row in enumerate(report.rows):
        est = [f"{row.deap_runtime_s[n]:.4g}" for n in report.n_conv]
        if not row.gpus:
            table.add_row(str(i), *est, "-", "-", "-")
        for gpu in row.gpus:
            speed = ", ".join(
                f"{row.speedup[(gpu.name, n)]:.2f}x" if row.speedup[(gpu.name, n)] is not None else "-"
                for n in report.n_conv
            )
            runtime = f"{gpu.runtime_s:.4g}" if gpu.runtime_s is not None else "[red]missing[/red]"
            table.add_row(str(i), *est, gpu.name, runtime, speed)
    console.print(table)
    for n in report.n_conv:
        console.print(f"energy ratio x{n}: {report.energy_ratio[n]:.3f} of mean GPU power "
                      f"({report.mean_gpu_power_w:.2f} W)")

    if check:
        checks = acceptance_checks(perf)
        run.add(write_json(run.path("checks.json"), [c.to_dict() for c in checks]))
        console.print(_checks_table(checks))
    run.finish()
    if check:
        _gate(checks)


@cli.command()
@global_options
@click.option("--r", "r", type=click.IntRange(1), default=None, help="Kernel edge R")
@click.option("--d", "d", type=click.IntRange(1), default=None, help="Channel count D")
@click.option("--count-model", type=click.Choice(["symmetric", "literal", "modulator-r2d"]), default=None,
              help="Component-count reading (default from config)")
@click.option("--allow-over-budget", is_flag=True, help="Price R^2 D above the MRR budget")
@click.option("--json", "json_output", is_flag=True, help="Output as JSON")
@click.pass_context
def power(
    ctx: click.Context,
    r: Optional[int],
    d: Optional[int],
    count_model: Optional[str],
    allow_over_budget: bool,
    json_output: bool,
) -> None:
    """Per-unit power breakdown; without --r/--d the two design points."""
    from .perf import design_point_power, unit_power
    from .reporting import write_csv, write_json

    state = _state(ctx)
    perf = state.config.perf
    if count_model:
        perf = perf.model_copy(update={"count_model": count_model})
    if (r is None) != (d is None):
        raise ContractError("give both --r and --d, or neither")

    run = _Run(state, "power", {"r": r, "d": d, "count_model": perf.count_model,
                                "allow_over_budget": allow_over_budget})
    if r is None:
        rows = design_point_power(perf)
    else:
        rows = [unit_power(r, d, perf, allow_over_budget=allow_over_budget)]  # type: ignore[arg-type]

    records = [row.to_dict() for row in rows]
    flat = [{"r": row.r, "d": row.d, "count_model": row.count_model, **row.watts, "total_w": row.total_w,
             "over_budget": row.over_budget} for row in rows]
    run.add(write_json(run.path("power.json"), records),
            write_csv(run.path("power.csv"), list(flat[0].keys()), flat))

    if json_output:
        console.print_json(data=records)
    else:
        table = Table(title=f"Unit power ({perf.count_model})", box=box.ROUNDED)
        table.add_column("R", style="cyan")
        table.add_column("D", style="cyan")
        for name in rows[0].watts:
            table.add_column(name, style="dim")
        table.add_column("Total (W)", style="green bold")
        for row in rows:
            flag = " [yellow](over budget)[/yellow]" if row.over_budget else ""
            table.add_row(str(row.r), str(row.d), *(f"{w:.3f}" for w in row.watts.values()),
                          f"{row.total_w:.2f}{flag}")
        console.print(table)
    run.finish()


@cli.command()
@global_options
@click.option("--deepbench", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Benchmark CSV to estimate (default from config; optional)")
@click.option("--n-conv", "n_conv", default="1,2", show_default=True, help="Comma-separated unit counts")
@click.option("--check", is_flag=True, help="Exit 2 when a check fails")
@click.option("--json", "json_output", is_flag=True, help="Output as JSON")
@click.pass_context
def report(ctx: click.Context, deepbench: Optional[Path], n_conv: str, check: bool, json_output: bool) -> None:
    """Hardware analysis: throughput chain, power, runtimes and energy ratios."""
    from .io import load_deepbench
    from .perf import (
        BENCHMARK_SHAPES,
        BenchRow,
        acceptance_checks,
        compare_report,
        design_point_power,
        propagation_time,
        shape_from_row,
        system_throughput,
    )
    from .reporting import write_csv, write_json

    state = _state(ctx)
    perf = state.config.perf
    counts = _ints(n_conv, "--n-conv")
    path = deepbench or state.config.paths.deepbench

    run = _Run(state, "report", {"deepbench": path, "n_conv": counts, "check": check})
    if path is not None:
        run.manifest.add_input(Path(path))
        rows = load_deepbench(path, perf)
    else:
        rows = [BenchRow(shape=shape_from_row(*dims)) for dims in BENCHMARK_SHAPES]

    chain = system_throughput(perf)
    t_prop = propagation_time(perf.mrr_count_per_path, perf.mrr_radius_m, perf)
    edges = design_point_power(perf)
    comparison = compare_report(rows, counts, perf, chain.pixel_time_s)
    checks = acceptance_checks(perf)

    doc = {
        "propagation_time_s": t_prop,
        "throughput": chain.to_dict(),
        "unit_power": [e.to_dict() for e in edges],
        "comparison": comparison.to_dict(),
        "checks": [c.to_dict() for c in checks],
        "sdram": {"rate_bps": perf.sdram_rate_bps, "bus_bits": perf.sdram_bus_bits},
    }
    run.add(write_json(run.path("report.json"), doc),
            write_csv(run.path("report.csv"), ["name", "measured", "expected", "tolerance", "relative",
                                               "passed", "note"], (c.to_dict() for c in checks)))

    if json_output:
        console.print_json(data=doc)
    else:
        stages = Table(title="Throughput chain", box=box.SIMPLE)
        stages.add_column("Stage", style="cyan")
        stages.add_column("GS/s", style="green")
        for name, rate in chain.stages.items():
            mark = " [yellow]<- bottleneck[/yellow]" if name in chain.bottleneck.split("/") else ""
            stages.add_row(name, f"{rate / 1e9:.2f}{mark}")
        console.print(stages)
        console.print(f"t_prop {t_prop * 1e12:.2f} ps, pixel time {chain.pixel_time_s * 1e12:.0f} ps")
        for e in edges:
            console.print(f"unit power R={e.r} D={e.d}: {e.total_w:.2f} W"
                          + (" (over budget)" if e.over_budget else ""))
        for i, row in enumerate(comparison.rows):
            est = ", ".join(f"x{n}: {row.deap_runtime_s[n]:.4g} s" for n in comparison.n_conv)
            console.print(f"row {i} runtime {est}")
        for n in comparison.n_conv:
            console.print(f"energy ratio x{n}: {comparison.energy_ratio[n]:.3f}")
        console.print(_checks_table(checks))
    run.finish()
    if check:
        _gate(checks)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting.

    0 on success, 1 on contract, parse or usage errors, 2 when an acceptance
    gate fails.
    """
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="deap-sim", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 1
    except click.exceptions.Abort:
        err_console.print("[red]Aborted[/red]")
        return 1
    except OSError as e:
        err_console.print(f"[red]Error:[/red] {escape(str(e))}")
        return 1
    return rv if isinstance(rv, int) else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
