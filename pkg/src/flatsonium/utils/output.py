"""
Result files.

Handles:
- CSV tables with a '#' metadata header, 12-digit scientific notation and LF endings
- Companion gnuplot scripts
- Plain-text sidecar notes

Nothing time- or host-dependent is written, so identical runs give
identical bytes.
"""

import csv
import logging
import math
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)

NUMBER_FORMAT = "{:.12e}"


class OutputError(RuntimeError):
    """A result file could not be written."""

    def __init__(self, path: Path, reason: str):
        self.path = path
        super().__init__(f"cannot write {path}: {reason}")


def format_number(value: float) -> str:
    """12-digit scientific notation; non-finite values become an empty cell."""
    value = float(value)
    if not math.isfinite(value):
        return ""
    return NUMBER_FORMAT.format(value)


def format_cell(value: object) -> str:
    if isinstance(value, str):
        return value
    return format_number(value)


def _write_text(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise OutputError(path, e.strerror or str(e))
    logger.info(f"Wrote {path}")
    return path


def write_table(
    path: Path,
    columns: Sequence[str],
    rows: Sequence[Sequence[object]],
    metadata: Mapping[str, object],
) -> Path:
    """
    Write a table as CSV.

    Args:
        path: destination file
        columns: header names, one per column of `rows`
        rows: one sequence per row; numbers are formatted, strings written as is
        metadata: written as '# key: value' lines above the header

    Raises:
        OutputError: if the file cannot be written
    """
    rows = [list(row) for row in rows]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"{len(columns)} columns named but a row has {len(row)}")

    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            for key, value in metadata.items():
                f.write(f"# {key}: {value}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_cell(x) for x in row])
    except OSError as e:
        raise OutputError(path, e.strerror or str(e))
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def companion_path(csv_path: Path, suffix: str) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + suffix)


def write_gnuplot_script(
    csv_path: Path,
    columns: Sequence[str],
    y_columns: Sequence[str],
    xlabel: str,
    ylabel: str,
    logscale_y: bool = False,
    style: str = "lines",
) -> Path:
    """
    Write `<stem>.gp`, a gnuplot script plotting `y_columns` against the first column.

    `style` is the gnuplot plotting style, "lines" for sweeps and "points" for
    isolated values.

    Raises:
        OutputError: if the script cannot be written
    """
    csv_path = Path(csv_path)
    image = csv_path.stem + ".png"
    lines = [
        f"# gnuplot script for {csv_path.name}",
        'set datafile separator ","',
        'set datafile commentschars "#"',
        "set datafile missing \"\"",
        f'set xlabel "{xlabel}"',
        f'set ylabel "{ylabel}"',
    ]
    if logscale_y:
        lines.append("set logscale y")
    lines += [
        "set key top right",
        'set terminal pngcairo size 900,600',
        f'set output "{image}"',
    ]
    plots = [
        f'"{csv_path.name}" using 1:{columns.index(name) + 1} every ::1 with {style} title "{name}"'
        for name in y_columns
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return _write_text(companion_path(csv_path, ".gp"), "\n".join(lines) + "\n")


def write_notes(csv_path: Path, notes: Sequence[str], title: Optional[str] = None) -> Path:
    """Write `<stem>.notes.txt` next to a table."""
    header = [title] if title else []
    return _write_text(companion_path(csv_path, ".notes.txt"), "\n".join(header + list(notes)) + "\n")
