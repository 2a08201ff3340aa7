"""TOML Utilities Module.

This module decodes TOML experiment configs with tomlkit and hands back plain
Python containers.
"""

from __future__ import annotations

from typing import Any

import tomlkit

from tomlkit.exceptions import TOMLKitError


def decode_toml(toml_data: str | memoryview | bytes | bytearray) -> dict[str, Any]:
    """Decodes a TOML string into plain Python dicts and lists using tomlkit.

    Args:
        toml_data (str | memoryview | bytes | bytearray): The TOML string to decode.

    Returns:
        dict[str, Any]: The decoded document with tomlkit wrappers removed.

    Raises:
        TOMLKitError: If the bytes are not UTF-8 or the document does not parse.
    """
    if not isinstance(toml_data, str):
        try:
            toml_data = bytes(toml_data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TOMLKitError(f"Failed to decode bytes to string: {toml_data!r}") from exc
    return tomlkit.parse(toml_data).unwrap()


def encode_toml(raw_data: dict[str, Any]) -> str:
    """Encodes a mapping into a TOML string using tomlkit.

    Args:
        raw_data (dict[str, Any]): The mapping to encode.

    Returns:
        str: The encoded TOML string.
    """
    return tomlkit.dumps(raw_data)
