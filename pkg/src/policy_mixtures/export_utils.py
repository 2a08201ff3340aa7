"""This module provides utilities for exporting experiment results.

It includes the 17-significant-digit number formatting shared by every
artifact, the CSV writer for traces and comparisons, and a wrapper that encodes
a result summary as YAML, JSON or TOML.
"""

from __future__ import annotations

import csv
import io
import math

from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from .json_utils import encode_json
from .toml_utils import encode_toml
from .yaml_utils import encode_yaml


def format_number(value: Any) -> str:
    """Formats a cell value for a text artifact.

    Floats (numpy floats included) use ``%.17g``; ints and strings are written
    as they are; ``None`` becomes an empty cell.

    Args:
        value (Any): The value to format.

    Returns:
        str: The formatted cell.
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        return f"{number:.17g}"
    return str(value)


def encode_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Encodes rows as CSV text with ``\\n`` line endings.

    Args:
        header (Sequence[str]): Column names.
        rows (Iterable[Sequence[Any]]): Row values, formatted with :func:`format_number`.

    Returns:
        str: The CSV document.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(cell) for cell in row])
    return buffer.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Writes rows to ``path`` as CSV, creating parent directories.

    Args:
        path (Path): Destination file.
        header (Sequence[str]): Column names.
        rows (Iterable[Sequence[Any]]): Row values.

    Returns:
        Path: The written path.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(encode_csv(header, rows), encoding="utf-8")
    return path


def make_raw_data_export_safe(raw_data: Any) -> Any:
    """Converts numpy values and paths into plain Python containers and scalars.

    Args:
        raw_data (Any): The data to convert.

    Returns:
        Any: Export-safe data.
    """
    if isinstance(raw_data, Mapping):
        return {str(k): make_raw_data_export_safe(v) for k, v in raw_data.items()}
    if isinstance(raw_data, np.ndarray):
        return [make_raw_data_export_safe(v) for v in raw_data.tolist()]
    if isinstance(raw_data, (list, tuple, set, frozenset)):
        return [make_raw_data_export_safe(v) for v in raw_data]
    if isinstance(raw_data, np.generic):
        return raw_data.item()
    if isinstance(raw_data, Path):
        return str(raw_data)
    return raw_data


def wrap_raw_data_for_export(raw_data: Mapping[str, Any], allow_encoding: str = "yaml") -> str:
    """Wraps raw data for export in the requested encoding.

    Args:
        raw_data (Mapping[str, Any]): The data to export.
        allow_encoding (str): One of ``yaml``, ``json`` or ``toml``.

    Returns:
        str: The encoded document.

    Raises:
        ValueError: If the encoding is not supported.
    """
    safe = make_raw_data_export_safe(raw_data)
    encoding = allow_encoding.casefold()
    if encoding == "yaml":
        return encode_yaml(safe)
    if encoding == "json":
        return encode_json(safe, indent_2=True, append_newline=True)
    if encoding == "toml":
        return encode_toml(safe)
    raise ValueError(f"Invalid allow_encoding value: {allow_encoding}")
