"""Atomic output files with round-trip float formatting."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence


def fmt(x: Any) -> str:
    """17 significant digits for floats; everything else via ``str``."""
    if isinstance(x, float):
        return format(x, ".16e")
    if x is None:
        return ""
    return str(x)


def _atomic_write(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])

    _atomic_write(path, write)
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_json(path: str | Path, data: Any) -> Path:
    path = Path(path)
    _atomic_write(path, lambda fh: fh.write(json.dumps(data, indent=2, sort_keys=True) + "\n"))
    return path


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    _atomic_write(path, lambda fh: fh.write(text))
    return path
