"""
Output Helper - deterministic CSV/JSON writers and content digests
Every numeric file is byte-reproducible: CSV uses 17 significant digits and
JSON uses sorted keys with shortest round-trip floats.
"""

import hashlib
import json
import math
from pathlib import Path
from typing import Any, List, Union

import numpy as np
from loguru import logger

PathLike = Union[str, Path]


def _plain(value: Any) -> Any:
    """Convert numpy containers and scalars into JSON-native values; NaN and inf become null."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return value.as_posix()
    return value


def canonical_json(document: Any) -> str:
    return json.dumps(_plain(document), indent=2, sort_keys=True, allow_nan=False) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class OutputWriter:
    """
    Writes the files of one experiment run into a directory and remembers
    them (in write order) for the run manifest.
    """

    def __init__(self, directory: PathLike):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.files: List[Path] = []

    def _register(self, path: Path) -> Path:
        self.files.append(path)
        logger.info(f"Wrote {path}")
        return path

    def write_csv(self, name: str, header: str, rows: np.ndarray) -> Path:
        """
        Args:
            name: File name relative to the run directory
            header: Comma-separated column names
            rows: 2-d array, one row per record
        """
        path = self.directory / name
        path.parent.mkdir(parents=True, exist_ok=True)
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.size == 0:
            rows = rows.reshape(0, len(header.split(",")))
        np.savetxt(path, rows, fmt="%.17g", delimiter=",", header=header, comments="")
        return self._register(path)

    def write_json(self, name: str, document: Any) -> Path:
        path = self.directory / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(canonical_json(document), encoding="utf-8")
        return self._register(path)

    def write_text(self, name: str, text: str) -> Path:
        path = self.directory / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return self._register(path)

    def digests(self) -> List[dict]:
        return [
            {"path": path.relative_to(self.directory).as_posix(), "sha256": sha256_file(path)}
            for path in self.files
        ]
