"""Tests for deap_sim.io package."""

from __future__ import annotations

import gzip
import json
import struct
from pathlib import Path

import numpy as np
import pytest

from deap_sim.cnn.model import CnnModel, Dataset
from deap_sim.config import PerfConfig
from deap_sim.errors import DataFormatError, SchemaError
from deap_sim.io import (
    DEEPBENCH_HEADER,
    load_deepbench,
    load_mnist,
    load_mnist_dir,
    load_model,
    load_tensor,
    read_idx,
    save_dataset_idx,
    save_model,
    save_tensor,
    split_paths,
)
from deap_sim.io.mnist import IMAGES_MAGIC, LABELS_MAGIC
from deap_sim.perf import BENCHMARK_SHAPES


def _write_labels(path: Path, labels: bytes) -> None:
    path.write_bytes(struct.pack(">II", LABELS_MAGIC, len(labels)) + labels)


class TestIdx:
    """IDX image and label files."""

    def test_plain_roundtrip(self, tmp_path: Path, tiny_dataset: Dataset):
        images, labels = tmp_path / "img", tmp_path / "lbl"
        save_dataset_idx(tiny_dataset, images, labels)
        loaded = load_mnist(images, labels)
        assert np.array_equal(loaded.images, tiny_dataset.images)
        assert np.array_equal(loaded.labels, [0, 1, 2])

    def test_gzip_roundtrip(self, tmp_path: Path, tiny_dataset: Dataset):
        images, labels = tmp_path / "img.gz", tmp_path / "lbl.gz"
        save_dataset_idx(tiny_dataset, images, labels)
        assert images.read_bytes()[:2] == b"\x1f\x8b"
        assert np.array_equal(load_mnist(images, labels).images, tiny_dataset.images)

    def test_gzip_output_is_byte_stable(self, tmp_path: Path, tiny_dataset: Dataset):
        save_dataset_idx(tiny_dataset, tmp_path / "a.gz", tmp_path / "b.gz")
        first = (tmp_path / "a.gz").read_bytes()
        save_dataset_idx(tiny_dataset, tmp_path / "a.gz", tmp_path / "b.gz")
        assert (tmp_path / "a.gz").read_bytes() == first

    def test_bad_magic(self, tmp_path: Path):
        path = tmp_path / "labels"
        path.write_bytes(struct.pack(">II", 0x0804, 0))
        with pytest.raises(DataFormatError) as exc:
            read_idx(path, LABELS_MAGIC)
        assert exc.value.offset == 0
        assert "byte 0" in str(exc.value)

    def test_truncated_body(self, tmp_path: Path):
        path = tmp_path / "images"
        path.write_bytes(struct.pack(">IIII", IMAGES_MAGIC, 2, 28, 28) + bytes(100))
        with pytest.raises(DataFormatError) as exc:
            read_idx(path, IMAGES_MAGIC)
        assert exc.value.offset == 116

    def test_truncated_header(self, tmp_path: Path):
        path = tmp_path / "images"
        path.write_bytes(struct.pack(">II", IMAGES_MAGIC, 2))
        with pytest.raises(DataFormatError):
            read_idx(path, IMAGES_MAGIC)

    def test_trailing_bytes(self, tmp_path: Path):
        path = tmp_path / "labels"
        _write_labels(path, bytes([1, 2]))
        with open(path, "ab") as f:
            f.write(b"\x00")
        with pytest.raises(DataFormatError) as exc:
            read_idx(path, LABELS_MAGIC)
        assert exc.value.offset == 10

    def test_corrupt_gzip(self, tmp_path: Path):
        path = tmp_path / "labels.gz"
        path.write_bytes(gzip.compress(b"x" * 64)[:20])
        with pytest.raises(DataFormatError):
            read_idx(path, LABELS_MAGIC)

    def test_count_mismatch(self, tmp_path: Path, tiny_dataset: Dataset):
        save_dataset_idx(tiny_dataset, tmp_path / "img", tmp_path / "lbl")
        _write_labels(tmp_path / "lbl", bytes([0, 1]))
        with pytest.raises(DataFormatError, match="3 images but 2 labels"):
            load_mnist(tmp_path / "img", tmp_path / "lbl")

    def test_label_out_of_range(self, tmp_path: Path, tiny_dataset: Dataset):
        save_dataset_idx(tiny_dataset, tmp_path / "img", tmp_path / "lbl")
        _write_labels(tmp_path / "lbl", bytes([0, 12, 1]))
        with pytest.raises(DataFormatError) as exc:
            load_mnist(tmp_path / "img", tmp_path / "lbl")
        assert exc.value.offset == 9


class TestMnistDir:
    def test_split_paths(self, mnist_dir: Path):
        images, labels = split_paths(mnist_dir, "train")
        assert images.name == "train-images-idx3-ubyte.gz"
        assert labels.name == "train-labels-idx1-ubyte.gz"
        assert split_paths(mnist_dir)[0].name == "t10k-images-idx3-ubyte"

    def test_limit(self, mnist_dir: Path):
        assert len(load_mnist_dir(mnist_dir, "test", limit=2)) == 2

    def test_missing_files(self, tmp_path: Path):
        with pytest.raises(DataFormatError, match="missing"):
            split_paths(tmp_path)

    def test_unknown_split(self, mnist_dir: Path):
        with pytest.raises(DataFormatError):
            split_paths(mnist_dir, "validation")


class TestModelFiles:
    """Model JSON documents."""

    def test_roundtrip_is_exact(self, tmp_path: Path, random_model: CnnModel):
        path = tmp_path / "model.json"
        save_model(path, random_model)
        loaded = load_model(path)
        for name, value in random_model.arrays().items():
            assert np.array_equal(getattr(loaded, name), value), name

    def test_resave_is_byte_stable(self, tmp_path: Path, model_file: Path):
        again = tmp_path / "again.json"
        save_model(again, load_model(model_file))
        assert again.read_bytes() == model_file.read_bytes()

    def test_truncated_json(self, tmp_path: Path, model_file: Path):
        broken = tmp_path / "broken.json"
        broken.write_text(model_file.read_text()[:200])
        with pytest.raises(DataFormatError) as exc:
            load_model(broken)
        assert not isinstance(exc.value, SchemaError)
        assert exc.value.line == 1

    def test_wrong_shape_names_field(self, tmp_path: Path, model_file: Path):
        doc = json.loads(model_file.read_text())
        doc["conv1"] = {"shape": [5, 5, 1, 4], "data": [0.0] * 100}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError) as exc:
            load_model(path)
        assert exc.value.field == "conv1"
        assert exc.value.path == path

    def test_data_length_mismatch(self, tmp_path: Path, model_file: Path):
        doc = json.loads(model_file.read_text())
        doc["fc2"]["data"] = doc["fc2"]["data"][:-1]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError) as exc:
            load_model(path)
        assert exc.value.field == "fc2"

    def test_missing_field(self, tmp_path: Path, model_file: Path):
        doc = json.loads(model_file.read_text())
        del doc["fc1_bias"]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError) as exc:
            load_model(path)
        assert exc.value.field == "fc1_bias"

    def test_unexpected_field(self, tmp_path: Path, model_file: Path):
        doc = json.loads(model_file.read_text())
        doc["conv3"] = []
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError) as exc:
            load_model(path)
        assert exc.value.field == "conv3"

    def test_unsupported_version(self, tmp_path: Path, model_file: Path):
        doc = json.loads(model_file.read_text())
        doc["format_version"] = 2
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError) as exc:
            load_model(path)
        assert exc.value.field == "format_version"


class TestTensorFiles:
    def test_roundtrip(self, tmp_path: Path, rng: np.random.Generator):
        array = rng.normal(size=(3, 4, 2))
        save_tensor(tmp_path / "t.json", array)
        assert np.array_equal(load_tensor(tmp_path / "t.json"), array)

    def test_shape_data_mismatch(self, tmp_path: Path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"format_version": 1, "shape": [2, 2], "data": [1.0, 2.0]}))
        with pytest.raises(SchemaError):
            load_tensor(path)

    def test_non_numeric_data(self, tmp_path: Path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"format_version": 1, "shape": [2], "data": [1.0, "x"]}))
        with pytest.raises(SchemaError):
            load_tensor(path)


class TestDeepBench:
    """Benchmark CSV ingestion."""

    def test_fixture(self, deepbench_csv: Path):
        rows = load_deepbench(deepbench_csv)
        assert len(rows) == 3
        for row, dims in zip(rows, BENCHMARK_SHAPES):
            w, h, d, n, k, r_w, r_h, s = dims
            shape = row.shape
            assert (shape.w, shape.h, shape.d, shape.n, shape.k) == (w, h, d, n, k)
            assert (shape.kernel_w, shape.kernel_h, shape.s) == (r_w, r_h, s)
            assert len(row.gpus) == 4
            assert all(g.power_w is not None and g.runtime_s is not None for g in row.gpus)

    def _write(self, tmp_path: Path, *lines: str) -> Path:
        path = tmp_path / "bench.csv"
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_blank_runtime_and_unknown_gpu(self, tmp_path: Path):
        path = self._write(
            tmp_path,
            ",".join(DEEPBENCH_HEADER),
            "7,7,832,16,256,1,1,1,AMD MI25,",
            "7,7,832,16,256,1,1,1,Some Card,1e-4",
        )
        (row,) = load_deepbench(path)
        assert row.gpus[0].runtime_s is None
        assert row.gpus[0].power_w == 300.0
        assert row.gpus[1].power_w is None

    def test_budget_violation_carries_line(self, tmp_path: Path):
        path = self._write(
            tmp_path,
            "# comment",
            ",".join(DEEPBENCH_HEADER),
            "7,7,832,16,256,1,1,1,AMD MI25,1e-4",
            "7,7,64,16,256,5,5,1,AMD MI25,1e-4",
        )
        with pytest.raises(DataFormatError) as exc:
            load_deepbench(path)
        assert exc.value.line == 4

    def test_budget_follows_config(self, tmp_path: Path):
        path = self._write(tmp_path, ",".join(DEEPBENCH_HEADER), "7,7,832,16,256,1,1,1,AMD MI25,1e-4")
        with pytest.raises(DataFormatError):
            load_deepbench(path, PerfConfig(mrr_budget=512))

    def test_bad_header(self, tmp_path: Path):
        path = self._write(tmp_path, "# header follows", "w,h,d,n,k,r,s,gpu,runtime_s")
        with pytest.raises(DataFormatError) as exc:
            load_deepbench(path)
        assert exc.value.line == 2

    def test_kernel_larger_than_input(self, tmp_path: Path):
        path = self._write(tmp_path, ",".join(DEEPBENCH_HEADER), "3,3,1,1,1,5,5,1,AMD MI25,1e-4")
        with pytest.raises(DataFormatError, match="invalid shape"):
            load_deepbench(path)

    def test_empty_file(self, tmp_path: Path, caplog: pytest.LogCaptureFixture):
        path = self._write(tmp_path, "# nothing here")
        assert load_deepbench(path) == []
        assert "no benchmark rows" in caplog.text
