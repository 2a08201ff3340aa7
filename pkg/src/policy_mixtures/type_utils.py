"""Type Utilities.

This module coerces loosely typed config values (strings from the command
line, ints where floats are expected, YAML booleans) into the Python types the
experiment layer expects.

Functions:
    - strtobool: Converts a string representation of truth to a boolean.
    - strtofloat: Converts a numeric string to a float.
    - strtoint: Converts an integral string to an int.
    - strtopath: Converts a string to a pathlib.Path.
    - coerce_value: Coerces a decoded config value to a target type.
    - coerce_float_list: Coerces a scalar or sequence into a list of floats.

Classes:
    - ConversionError: Raised when a value does not match the expected type.

Constants:
    - NUMBER_PATTERN: Regex for matching numeric strings, exponents included.
    - TRUTHY_PATTERN: Regex for matching truthy strings.
    - FALSY_PATTERN: Regex for matching falsy strings.
"""

from __future__ import annotations

import math
import os
import re

from collections.abc import Sequence
from pathlib import Path
from typing import Any


NUMBER_PATTERN: re.Pattern[str] = re.compile(
    r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$"
)
TRUTHY_PATTERN: re.Pattern[str] = re.compile(r"^(y|yes|t|true|on|1)$", re.IGNORECASE)
FALSY_PATTERN: re.Pattern[str] = re.compile(r"^(n|no|f|false|off|0)$", re.IGNORECASE)


class ConversionError(ValueError):
    """Custom error class for handling conversion failures.

    Args:
        expected_type (type): The expected Python type.
        value (Any): The actual value being converted.

    Example:
        >>> raise ConversionError(int, 'invalid')
        ConversionError: Invalid <class 'int'> value: 'invalid'
    """

    def __init__(self, expected_type: type, value: Any):
        """Initialize the ConversionError with expected type and value.

        Args:
            expected_type (type): The expected Python type.
            value (Any): The value that failed conversion.
        """
        self.expected_type = expected_type
        self.value = value

        if expected_type == Path:
            type_str = "<class 'pathlib.Path'>"
        else:
            type_str = str(self.expected_type)

        super().__init__(f"Invalid {type_str} value: {self.value!r}")


def strtobool(val: str | bool | None, raise_on_error: bool = False) -> bool | None:
    """Converts a string representation of truth to boolean.

    Args:
        val (str | bool | None): The value to convert.
        raise_on_error (bool): Whether to raise an error on invalid value. Defaults to False.

    Returns:
        bool | None: The converted boolean value, or None if invalid and raise_on_error is False.

    Raises:
        ConversionError: If the value is invalid and raise_on_error is True.
    """
    if isinstance(val, bool) or val is None:
        return val

    if isinstance(val, str):
        if TRUTHY_PATTERN.match(val):
            return True
        if FALSY_PATTERN.match(val):
            return False

    if raise_on_error:
        raise ConversionError(bool, val)

    return None


def strtofloat(val: str, raise_on_error: bool = False) -> float | None:
    """Converts a string representation of a float to a float.

    Args:
        val (str): The string value to convert.
        raise_on_error (bool): Whether to raise an error on invalid value. Defaults to False.

    Returns:
        float | None: The converted float value, or None if invalid and raise_on_error is False.

    Raises:
        ConversionError: If the value is invalid and raise_on_error is True.
    """
    if NUMBER_PATTERN.match(val.strip()):
        return float(val)

    if raise_on_error:
        raise ConversionError(float, val)

    return None


def strtoint(val: str, raise_on_error: bool = False) -> int | None:
    """Converts a string representation of an integer to an int.

    Strings such as ``"1e5"`` are accepted when they denote a whole number.

    Args:
        val (str): The string value to convert.
        raise_on_error (bool): Whether to raise an error on invalid value. Defaults to False.

    Returns:
        int | None: The converted integer value, or None if invalid and raise_on_error is False.

    Raises:
        ConversionError: If the value is invalid and raise_on_error is True.
    """
    float_value = strtofloat(val)
    if float_value is not None and math.isfinite(float_value) and float_value.is_integer():
        return int(float_value)

    if raise_on_error:
        raise ConversionError(int, val)

    return None


def strtopath(
    val: str | bytes | os.PathLike[str] | None, raise_on_error: bool = False
) -> Path | None:
    """Converts a string or byte representation of a path to a pathlib.Path object.

    Args:
        val (str | bytes | os.PathLike[str] | None): The value to convert.
        raise_on_error (bool): Whether to raise an error on invalid value. Defaults to False.

    Returns:
        Path | None: The converted Path object, or None if invalid and raise_on_error is False.

    Raises:
        ConversionError: If the value is invalid and raise_on_error is True.
    """
    if isinstance(val, Path) or val is None:
        return val
    if isinstance(val, bytes):
        try:
            val = val.decode("utf-8")
        except UnicodeDecodeError as exc:
            if raise_on_error:
                raise ConversionError(Path, val) from exc
            return None
    text = os.fspath(val)
    if text and "\x00" not in text:
        return Path(text)
    if raise_on_error:
        raise ConversionError(Path, val)
    return None


def coerce_value(expected_type: type, value: Any) -> Any:
    """Coerces a decoded config value to ``expected_type``.

    Booleans are never accepted where a number is expected, and floats are
    accepted as ints only when they are whole.

    Args:
        expected_type (type): One of ``bool``, ``int``, ``float``, ``str`` or ``Path``.
        value (Any): The decoded value.

    Returns:
        Any: The coerced value.

    Raises:
        ConversionError: If the value cannot be represented as ``expected_type``.
    """
    if expected_type is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            return strtobool(value, raise_on_error=True)
        raise ConversionError(bool, value)

    if expected_type is int:
        if isinstance(value, bool):
            raise ConversionError(int, value)
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            return strtoint(value, raise_on_error=True)
        raise ConversionError(int, value)

    if expected_type is float:
        if isinstance(value, bool):
            raise ConversionError(float, value)
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            return strtofloat(value, raise_on_error=True)
        raise ConversionError(float, value)

    if expected_type is str:
        if isinstance(value, str):
            return value
        raise ConversionError(str, value)

    if expected_type is Path:
        if isinstance(value, (str, bytes, os.PathLike)):
            return strtopath(value, raise_on_error=True)
        raise ConversionError(Path, value)

    raise ConversionError(expected_type, value)


def coerce_float_list(value: Any) -> list[float]:
    """Coerces a number or a sequence of numbers into a list of floats.

    Args:
        value (Any): A scalar or a sequence of scalars.

    Returns:
        list[float]: The coerced values.

    Raises:
        ConversionError: If any element is not numeric.
    """
    if isinstance(value, Sequence) and not isinstance(value, (str, bytes)):
        return [coerce_value(float, item) for item in value]
    return [coerce_value(float, value)]
