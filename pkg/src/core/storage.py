"""Atomic file output for reports, trajectories and histograms"""

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

from .logger import logger

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write text to a file via a temporary sibling and an atomic rename.

    Args:
        path: Destination file
        text: Full file content (UTF-8)

    Returns:
        The destination path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    temp_path = target.with_name(target.name + ".tmp")
    try:
        with open(temp_path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        temp_path.replace(target)
    except Exception:
        if temp_path.exists():
            temp_path.unlink()
        logger.get_logger().error(f"Failed to write {target}")
        raise
    logger.get_logger().debug(f"Wrote {len(text)} characters to {target}")
    return target


def to_json_text(data: Any) -> str:
    """Deterministic JSON text (sorted keys, trailing newline)"""
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: PathLike, data: Any) -> Path:
    """Serialize data to JSON and write it atomically"""
    return atomic_write_text(path, to_json_text(data))


def to_csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render rows as CSV with a mandatory header and '\\n' line endings"""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    return buf.getvalue()


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Render rows as CSV and write atomically"""
    return atomic_write_text(path, to_csv_text(header, rows))


def format_cell(value: Any) -> str:
    """Floats use repr so values round-trip exactly and output is byte-stable"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    if hasattr(value, "item"):
        return format_cell(value.item())
    return str(value)
