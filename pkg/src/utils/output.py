"""Deterministic CSV/JSON writers and all-or-nothing run output."""

from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from src.utils.path_safety import OutputPathError, ensure_output_dir

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 9


def format_number(value: float) -> str:
    """Render a number with the fixed precision used by every output file."""
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def round_floats(value: Any) -> Any:
    """Recursively round floats so JSON output is stable across platforms."""
    if isinstance(value, bool | int | str) or value is None:
        return value
    if isinstance(value, float | np.floating):
        return float(format_number(float(value)))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, Mapping):
        return {str(key): round_floats(item) for key, item in value.items()}
    if isinstance(value, Sequence | np.ndarray):
        return [round_floats(item) for item in value]
    return value


def csv_text(header: Sequence[str], columns: Sequence[np.ndarray]) -> str:
    """Header row plus comma-separated rows, LF line endings."""
    arrays = [np.asarray(column) for column in columns]
    lengths = {len(array) for array in arrays}
    if len(lengths) > 1:
        raise ValueError(f"CSV columns differ in length: {sorted(lengths)}")
    lines = [",".join(header)]
    for row in zip(*arrays, strict=True):
        lines.append(",".join(format_number(float(value)) for value in row))
    return "\n".join(lines) + "\n"


def table_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """CSV for rows mixing labels and numbers; numbers get the fixed precision."""
    lines = [",".join(header)]
    for row in rows:
        cells = [
            cell if isinstance(cell, str) else format_number(float(cell)) for cell in row
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def json_text(payload: Any) -> str:
    return json.dumps(round_floats(payload), indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except OSError as exc:  # pragma: no cover - unexpected I/O failure
        Path(tmp_name).unlink(missing_ok=True)
        raise OutputPathError(f"Unable to write {path}: {exc.strerror or exc}") from exc
    return path


class RunOutputs:
    """Collects the files of one run in a staging area.

    Nothing appears in the output directory until :meth:`commit`; a run that
    fails calls :meth:`discard` and leaves no data files behind.
    """

    def __init__(self, out_dir: str | Path) -> None:
        self.out_dir = ensure_output_dir(out_dir)
        self.staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out_dir))
        self.names: list[str] = []

    def write_text(self, name: str, text: str) -> None:
        if "/" in name or name.startswith("."):
            raise OutputPathError(f"Output file name must be a plain name: {name}")
        (self.staging / name).write_text(text, encoding="utf-8", newline="\n")
        if name not in self.names:
            self.names.append(name)

    def write_csv(
        self, name: str, header: Sequence[str], columns: Sequence[np.ndarray]
    ) -> None:
        self.write_text(name, csv_text(header, columns))

    def write_json(self, name: str, payload: Any) -> None:
        self.write_text(name, json_text(payload))

    def commit(self) -> list[Path]:
        """Move staged files into the output directory and drop the staging area."""
        written: list[Path] = []
        for name in self.names:
            target = self.out_dir / name
            os.replace(self.staging / name, target)
            written.append(target)
        shutil.rmtree(self.staging, ignore_errors=True)
        logger.info(f"Wrote {len(written)} output files to {self.out_dir}")
        return written

    def discard(self) -> None:
        shutil.rmtree(self.staging, ignore_errors=True)
        logger.debug(f"Discarded staged outputs in {self.staging}")
