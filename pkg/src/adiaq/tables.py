"""CSV tables and ``key = value`` metadata sidecars."""

from __future__ import annotations

import csv
import io
import numbers
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SIGNIFICANT_DIGITS = 12


def format_value(x) -> str:
    """Integers verbatim, floats with 12 significant digits, booleans as true/false."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, numbers.Integral):
        return str(int(x))
    if isinstance(x, numbers.Real):
        return format(float(x), f".{SIGNIFICANT_DIGITS}g")
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        writer.writerow([format_value(x) for x in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows))
    return path


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header and a float array of the rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(x) for x in row] for row in reader]
    return header, np.array(data, dtype=float).reshape(-1, len(header))


def _meta_value(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(format_value(x) for x in v)
    if v is None:
        return "none"
    return format_value(v)


def metadata_text(meta: Mapping[str, object]) -> str:
    lines = []
    for key, value in meta.items():
        if "=" in key or "\n" in key:
            raise ValueError(f"bad metadata key {key!r}")
        text = _meta_value(value)
        if "\n" in text:
            raise ValueError(f"metadata value for {key!r} spans lines")
        lines.append(f"{key} = {text}\n")
    return "".join(lines)


def write_metadata(path: str | Path, meta: Mapping[str, object]) -> Path:
    path = Path(path)
    path.write_text(metadata_text(meta))
    return path


def read_metadata(path: str | Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ValueError(f"malformed metadata line: {line!r}")
        out[key.strip()] = value.strip()
    return out
