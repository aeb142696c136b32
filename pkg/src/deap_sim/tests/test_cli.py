"""Tests for the deap-sim command line."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import pytest
from click.testing import CliRunner

from deap_sim import __version__
from deap_sim.__main__ import cli, run
from deap_sim.cnn.model import Dataset
from deap_sim.cnn.runtime import predict
from deap_sim.io import load_model, save_dataset_idx


@pytest.fixture
def cli_runner() -> CliRunner:
    """Provide a Click CLI test runner."""
    return CliRunner()


@pytest.fixture
def out(tmp_path: Path) -> Path:
    return tmp_path / "out"


class TestDeviceCurve:
    def test_writes_csv_and_manifest(self, cli_runner: CliRunner, out: Path):
        result = cli_runner.invoke(cli, ["--output-dir", str(out), "device-curve"])
        assert result.exit_code == 0, result.output
        lines = (out / "device-curve" / "device_curve.csv").read_text().splitlines()
        assert lines[0] == "phi,T_n,T_p,T_d,mode"
        assert len(lines) == 1001
        manifest = json.loads((out / "device-curve" / "manifest.json").read_text())
        assert manifest["command"] == "device-curve"
        assert "device_curve.csv" in manifest["outputs"]

    def test_rerun_is_byte_identical(self, cli_runner: CliRunner, out: Path):
        cli_runner.invoke(cli, ["device-curve", "--output-dir", str(out), "--balanced"])
        first = {p.name: p.read_bytes() for p in (out / "device-curve").iterdir()}
        cli_runner.invoke(cli, ["device-curve", "--output-dir", str(out), "--balanced"])
        second = {p.name: p.read_bytes() for p in (out / "device-curve").iterdir()}
        assert first == second

    def test_global_options_after_subcommand(self, cli_runner: CliRunner, out: Path):
        result = cli_runner.invoke(cli, ["device-curve", "--samples", "11", "--mode", "verbatim",
                                         "--output-dir", str(out)])
        assert result.exit_code == 0, result.output
        rows = list(csv.DictReader((out / "device-curve" / "device_curve.csv").open()))
        assert len(rows) == 11
        assert rows[0]["mode"] == "verbatim"


class TestDot:
    def test_dot(self, cli_runner: CliRunner, out: Path):
        result = cli_runner.invoke(cli, ["--output-dir", str(out), "--quant-bits", "0", "dot",
                                         "--weights", "1,-3,2", "--inputs", "0.5,1,0.25"])
        assert result.exit_code == 0, result.output
        record = json.loads((out / "dot" / "dot.json").read_text())
        assert record["exact"] == pytest.approx(-2.0)
        assert record["abs_error"] < 1e-9

    def test_out_of_range_input_exits_1(self, out: Path):
        assert run(["--output-dir", str(out), "dot", "--weights", "1", "--inputs", "2"]) == 1


class TestConvolve:
    def test_random_instance_matches_reference(self, cli_runner: CliRunner, out: Path):
        result = cli_runner.invoke(cli, ["--output-dir", str(out), "--quant-bits", "0", "--seed", "3",
                                         "convolve", "--random", "8,8,2,3,4", "--stride", "2", "--pad", "1"])
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "convolve" / "convolve.json").read_text())
        assert summary["max_abs_error"] < 1e-9
        assert summary["output_shape"] == [4, 4, 4]
        assert (out / "convolve" / "output.json").exists()

    def test_needs_an_input(self, out: Path):
        assert run(["--output-dir", str(out), "convolve"]) == 1


class TestPower:
    def test_design_points(self, cli_runner: CliRunner, out: Path):
        result = cli_runner.invoke(cli, ["--output-dir", str(out), "power", "--json"])
        assert result.exit_code == 0, result.output
        records = json.loads((out / "power" / "power.json").read_text())
        assert len(records) == 2
        assert records[0]["total_w"] == pytest.approx(95.444)
        assert records[1]["over_budget"] is True

    def test_over_budget_without_flag_exits_1(self, out: Path):
        assert run(["--output-dir", str(out), "power", "--r", "10", "--d", "12"]) == 1

    def test_over_budget_with_flag(self, out: Path):
        assert run(["--output-dir", str(out), "power", "--r", "10", "--d", "12", "--allow-over-budget"]) == 0


class TestBenchAndReport:
    """Benchmark comparison and the hardware analysis gate."""

    def test_bench_fixture(self, cli_runner: CliRunner, out: Path, deepbench_csv: Path):
        result = cli_runner.invoke(cli, ["--output-dir", str(out), "bench", "--deepbench", str(deepbench_csv),
                                         "--n-conv", "1,2", "--check"])
        assert result.exit_code == 0, result.output
        rows = list(csv.DictReader((out / "bench" / "bench.csv").open()))
        assert len(rows) == 24
        checks = json.loads((out / "bench" / "checks.json").read_text())
        assert all(c["passed"] for c in checks)

    def test_report_check_passes(self, out: Path):
        assert run(["--output-dir", str(out), "report", "--check"]) == 0
        doc = json.loads((out / "report" / "report.json").read_text())
        assert doc["throughput"]["bottleneck"] == "dac/adc"
        assert len(doc["comparison"]["rows"]) == 3

    def test_report_check_fails_with_fast_converters(self, tmp_path: Path, out: Path):
        config = tmp_path / "fast.json"
        config.write_text(json.dumps({"perf": {"dac_sps": 50e9, "adc_sps": 50e9}}))
        assert run(["--config", str(config), "--output-dir", str(out), "report", "--check"]) == 2

    def test_report_without_check_does_not_gate(self, tmp_path: Path, out: Path):
        config = tmp_path / "fast.json"
        config.write_text(json.dumps({"perf": {"dac_sps": 50e9, "adc_sps": 50e9}}))
        assert run(["--config", str(config), "--output-dir", str(out), "report"]) == 0


class TestModelCommands:
    """infer and evaluate on a tiny MNIST directory."""

    def test_infer_digital(self, cli_runner: CliRunner, out: Path, model_file: Path, mnist_dir: Path):
        result = cli_runner.invoke(cli, ["--output-dir", str(out), "infer", "--model", str(model_file),
                                         "--mnist-dir", str(mnist_dir), "--index", "2", "--backend", "digital"])
        assert result.exit_code == 0, result.output
        record = json.loads((out / "infer" / "infer.json").read_text())
        assert record["label"] == 2
        assert record["shapes"][-1] == {"stage": "fc2", "shape": [10]}
        assert len(record["scores"]) == 10

    def test_infer_index_past_end(self, out: Path, model_file: Path, mnist_dir: Path):
        assert run(["--output-dir", str(out), "infer", "--model", str(model_file),
                    "--mnist-dir", str(mnist_dir), "--index", "5"]) == 1

    def test_evaluate_gate_fails(self, tmp_path: Path, out: Path, model_file: Path, tiny_dataset: Dataset):
        preds = predict(load_model(model_file), tiny_dataset, backend="digital")
        wrong = Dataset(images=tiny_dataset.images, labels=(preds + 1) % 10)
        directory = tmp_path / "wrong"
        directory.mkdir()
        save_dataset_idx(wrong, directory / "t10k-images-idx3-ubyte", directory / "t10k-labels-idx1-ubyte")

        code = run(["--output-dir", str(out), "evaluate", "--model", str(model_file), "--mnist-dir",
                    str(directory), "--backend", "digital", "--check"])
        assert code == 2
        record = json.loads((out / "evaluate" / "evaluate.json").read_text())
        assert record["accuracy"]["digital"] == 0.0
        assert record["passed"] is False

    def test_evaluate_without_gate(self, out: Path, model_file: Path, mnist_dir: Path):
        assert run(["--output-dir", str(out), "evaluate", "--model", str(model_file), "--mnist-dir",
                    str(mnist_dir), "--backend", "digital"]) == 0


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get("DEAP_MNIST_DIR"), reason="set DEAP_MNIST_DIR to the MNIST IDX files")
class TestTrainThenEvaluate:
    """The trained model from `train` passes the photonic 7-bit gate on 500 test images."""

    def test_photonic_gate(self, out: Path):
        pytest.importorskip("torch")
        mnist = os.environ["DEAP_MNIST_DIR"]
        assert run(["--output-dir", str(out), "--seed", "0", "train", "--mnist-dir", mnist]) == 0
        model = out / "train" / "model.json"

        code = run(["--output-dir", str(out), "--quant-bits", "7", "evaluate", "--model", str(model),
                    "--mnist-dir", mnist, "--backend", "photonic", "--test-size", "500",
                    "--check", "--min-accuracy", "0.97"])
        record = json.loads((out / "evaluate" / "evaluate.json").read_text())
        assert code == 0, record
        assert record["images"] == 500
        assert record["accuracy"]["photonic"] >= 0.97


class TestEntryPoint:
    def test_version(self, cli_runner: CliRunner):
        result = cli_runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_unknown_flag_exits_1(self):
        assert run(["--no-such-flag"]) == 1

    def test_missing_config_exits_1(self, tmp_path: Path):
        assert run(["--config", str(tmp_path / "nope.json"), "report"]) == 1

    def test_help_lists_commands(self, cli_runner: CliRunner):
        result = cli_runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        for command in ("device-curve", "dot", "convolve", "train", "infer", "evaluate", "bench", "power", "report"):
            assert command in result.output

    def test_help_through_run(self):
        assert run(["--help"]) == 0
