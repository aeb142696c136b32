"""Tests for deap_sim.manifest module."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from deap_sim.manifest import RunManifest, digest_files


class TestDigestFiles:
    def test_keys_relative_to_root(self, tmp_path: Path):
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "a.csv").write_bytes(b"x,y\n1,2\n")
        digests = digest_files([tmp_path / "sub" / "a.csv"], root=tmp_path)
        assert digests == {"sub/a.csv": hashlib.sha256(b"x,y\n1,2\n").hexdigest()}

    def test_missing_files_and_directories_skipped(self, tmp_path: Path):
        assert digest_files([tmp_path / "nope", tmp_path]) == {}

    def test_large_file_hashed_in_blocks(self, tmp_path: Path):
        payload = bytes(range(256)) * 1000
        path = tmp_path / "big.bin"
        path.write_bytes(payload)
        assert digest_files([path])[str(path)] == hashlib.sha256(payload).hexdigest()


class TestRunManifest:
    """Recording inputs and outputs of a run."""

    def test_inputs_and_outputs(self, tmp_path: Path):
        source = tmp_path / "model.json"
        source.write_text("{}")
        out = tmp_path / "out"
        out.mkdir()
        (out / "result.json").write_text("[]")

        manifest = RunManifest(command="infer", arguments={"index": 0}, config_digest="abc", seed=0)
        manifest.add_input(source)
        manifest.add_input(None)
        manifest.record_outputs(out, [out / "result.json"])
        written = json.loads(manifest.write(out).read_text())

        assert written["inputs"] == {str(source): hashlib.sha256(b"{}").hexdigest()}
        assert list(written["outputs"]) == ["result.json"]
        assert "timestamp" not in json.dumps(written)
