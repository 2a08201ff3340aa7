"""JSON Utilities Module.

This module provides orjson-based encoding and decoding, and the canonical
hashing used to key occupancy caches.
"""

from __future__ import annotations

import hashlib

from typing import Any

import numpy as np
import orjson


def decode_json(json_data: str | memoryview | bytes | bytearray) -> Any:
    """Decodes a JSON string or bytes into a Python object using orjson.

    Args:
        json_data (str | memoryview | bytes | bytearray): The JSON string or bytes to decode.

    Returns:
        Any: The decoded Python object.
    """
    return orjson.loads(json_data)


def _default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"Type is not JSON serializable: {type(obj).__name__}")


def encode_json(
    raw_data: Any,
    indent_2: bool = False,
    sort_keys: bool = False,
    append_newline: bool = False,
) -> str:
    """Encodes a Python object into a JSON string using orjson.

    Numpy arrays and scalars are serialized natively.

    Args:
        raw_data (Any): The Python object to encode.
        indent_2 (bool): Pretty-print output with an indent of two spaces.
        sort_keys (bool): Serialize dict keys in sorted order.
        append_newline (bool): Append newline to the end of the output.

    Returns:
        str: The encoded JSON string.

    Raises:
        TypeError: If an unsupported type is encountered.
    """
    option = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS
    if indent_2:
        option |= orjson.OPT_INDENT_2
    if sort_keys:
        option |= orjson.OPT_SORT_KEYS
    if append_newline:
        option |= orjson.OPT_APPEND_NEWLINE

    try:
        return orjson.dumps(raw_data, default=_default, option=option).decode("utf-8")
    except orjson.JSONEncodeError as exc:
        raise TypeError(str(exc)) from exc


def canonical_hash(raw_data: Any) -> str:
    """Returns the SHA-256 hex digest of the canonical JSON encoding of ``raw_data``.

    Two values that encode to the same sorted-key JSON share a hash, so dict
    insertion order never changes a cache key.

    Args:
        raw_data (Any): The value to hash.

    Returns:
        str: The hex digest.
    """
    encoded = encode_json(raw_data, sort_keys=True)
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def array_hash(*arrays: np.ndarray) -> str:
    """Returns the SHA-256 hex digest of the given arrays' shapes and float64 bytes.

    Args:
        arrays (np.ndarray): The arrays to hash, in order.

    Returns:
        str: The hex digest.
    """
    digest = hashlib.sha256()
    for array in arrays:
        values = np.ascontiguousarray(array, dtype=np.float64)
        digest.update(encode_json(list(values.shape)).encode("utf-8"))
        digest.update(values.tobytes())
    return digest.hexdigest()
