"""
Sweep CSV and JSON artifacts.

Floats are written with 17 significant digits so that every value
round-trips exactly; files are written to a temporary sibling and
renamed into place.
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterator, Union

from .exceptions import SchemaError
from .sweep import SweepPoint, SweepResult

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

LEVEL_COLUMNS = 5
CSV_COLUMNS = (
    "param",
    "sp",
    "concurrence",
    "f_global",
    "f_local",
    *(name for k in range(LEVEL_COLUMNS) for name in (f"e{k}", f"d{k}")),
)


def format_float(value: float) -> str:
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def _rows(sweep: SweepResult) -> Iterator[list[str]]:
    for point in sweep.points:
        row = [
            format_float(point.param),
            format_float(point.sp),
            format_float(point.concurrence),
            format_float(point.f_global),
            format_float(point.f_local),
        ]
        for k in range(LEVEL_COLUMNS):
            if k < len(point.energies):
                row += [format_float(point.energies[k]), str(point.degeneracies[k])]
            else:
                row += ["nan", "0"]
        yield row


def atomic_write(path: PathLike, text: str) -> None:
    """Write text to a temporary file in the target directory, then rename."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=target.parent, prefix=f".{target.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_sweep_csv(path: PathLike, sweep: SweepResult) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(_rows(sweep))
    atomic_write(path, buffer.getvalue())
    logger.info(f"Wrote {len(sweep.points)} rows to {path}")
    return Path(path)


def write_json(path: PathLike, payload: Any) -> Path:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=True)
    atomic_write(path, text + "\n")
    return Path(path)


def manifest_path(csv_path: PathLike) -> Path:
    return Path(csv_path).with_suffix(".json")


def read_json(path: PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e}") from e


def read_sweep_csv(path: PathLike) -> list[SweepPoint]:
    """
    Parse a sweep CSV into point records.

    Raises:
        SchemaError: If the file is empty or its header differs from
            the expected columns; the message lists the difference
    """
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise SchemaError(
                f"{path} is empty; expected header {','.join(CSV_COLUMNS)}"
            )
        if tuple(header) != CSV_COLUMNS:
            missing = [c for c in CSV_COLUMNS if c not in header]
            unexpected = [c for c in header if c not in CSV_COLUMNS]
            raise SchemaError(
                f"{path} has columns {header}; "
                f"missing {missing}, unexpected {unexpected}"
            )
        points = []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(CSV_COLUMNS):
                raise SchemaError(
                    f"{path}:{line} has {len(row)} fields, expected {len(CSV_COLUMNS)}"
                )
            try:
                values = dict(zip(CSV_COLUMNS, row))
                levels = [
                    (float(values[f"e{k}"]), int(values[f"d{k}"]))
                    for k in range(LEVEL_COLUMNS)
                    if int(values[f"d{k}"]) > 0
                ]
                points.append(
                    SweepPoint(
                        param=float(values["param"]),
                        sp=float(values["sp"]),
                        concurrence=float(values["concurrence"]),
                        f_global=float(values["f_global"]),
                        f_local=float(values["f_local"]),
                        energies=tuple(e for e, _ in levels),
                        degeneracies=tuple(d for _, d in levels),
                    )
                )
            except ValueError as e:
                raise SchemaError(f"{path}:{line}: {e}") from e
    if not points:
        raise SchemaError(f"{path} holds a header but no rows")
    return points
