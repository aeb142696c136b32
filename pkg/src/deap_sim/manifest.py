"""
Manifest - Provenance record written beside every CLI run's outputs.

Holds the command and its arguments, the effective config digest, hashes of
every input and output file, library versions and host facts. There are no
timestamps, so rerunning a command reproduces the manifest byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import numpy as np
import psutil

from . import __version__


logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def digest_files(files: Iterable[Path], root: Optional[Path] = None) -> Dict[str, str]:
    """SHA-256 of every existing file, keyed by its path (relative to ``root`` when given)."""
    digests: Dict[str, str] = {}
    for path in map(Path, files):
        if not path.is_file():
            continue
        sha = hashlib.sha256()
        with path.open("rb") as stream:
            while block := stream.read(1 << 16):
                sha.update(block)
        key = path.relative_to(root).as_posix() if root is not None else str(path)
        digests[key] = sha.hexdigest()
    return digests


def _versions() -> Dict[str, str]:
    import click
    import pydantic

    versions = {
        "deap_sim": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pydantic": pydantic.VERSION,
        "click": click.__version__ if hasattr(click, "__version__") else "unknown",
    }
    try:
        import torch

        versions["torch"] = torch.__version__
    except ImportError:
        pass
    return versions


def _host() -> Dict[str, Any]:
    return {
        "system": platform.system(),
        "machine": platform.machine(),
        "physical_cores": psutil.cpu_count(logical=False),
        "logical_cores": psutil.cpu_count(logical=True),
        "memory_bytes": psutil.virtual_memory().total,
    }


@dataclass
class RunManifest:
    """Provenance of one run.

    Attributes:
        command: Subcommand name
        arguments: Subcommand arguments as given (JSON-serializable)
        config_digest: SHA-256 of the effective RunConfig
        seed: Seed in effect
        inputs: Input path -> SHA-256
        outputs: Output file name (relative to the output dir) -> SHA-256
    """
    command: str
    arguments: Dict[str, Any]
    config_digest: str
    seed: int
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    def add_input(self, path: Optional[Path]) -> None:
        if path is not None:
            self.inputs.update(digest_files([path]))

    def record_outputs(self, output_dir: Path, files: Iterable[Path]) -> None:
        self.outputs.update(digest_files(files, root=output_dir))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "arguments": self.arguments,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "versions": _versions(),
            "host": _host(),
        }

    def write(self, output_dir: Path) -> Path:
        output_dir.mkdir(parents=True, exist_ok=True)
        path = output_dir / MANIFEST_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.debug(f"Wrote manifest {path}")
        return path
