"""This module provides utility functions for YAML encoding and decoding.

Besides plain decoding it can report the line of every mapping key, which the
config layer uses to anchor error messages.
"""

from __future__ import annotations

from typing import Any

import yaml

from yaml.nodes import MappingNode, Node, SequenceNode

from .dumpers import PureDumper
from .loaders import PureLoader


def _bytes_to_str(data: str | memoryview | bytes | bytearray) -> str:
    if isinstance(data, str):
        return data
    return bytes(data).decode("utf-8")


def decode_yaml(yaml_data: str | memoryview | bytes | bytearray) -> Any:
    """Decode YAML data into a Python object.

    Args:
        yaml_data (str | memoryview | bytes | bytearray): The YAML data to decode.

    Returns:
        Any: The decoded Python object.

    Raises:
        yaml.YAMLError: If the data is not valid UTF-8 or not valid YAML.
    """
    try:
        text = _bytes_to_str(yaml_data)
    except UnicodeDecodeError as exc:
        raise yaml.YAMLError(f"Failed to decode bytes to string: {yaml_data!r}") from exc
    return yaml.load(text, Loader=PureLoader)  # noqa: S506


def yaml_key_lines(yaml_data: str) -> dict[tuple[str, ...], int]:
    """Map every mapping key path to the one-based line it appears on.

    Args:
        yaml_data (str): The YAML document.

    Returns:
        dict[tuple[str, ...], int]: Key paths such as ``("sgd", "T")`` mapped to
        line numbers. Sequence positions appear as their index string.
    """
    root = yaml.compose(yaml_data, Loader=PureLoader)  # noqa: S506
    lines: dict[tuple[str, ...], int] = {}

    def walk(node: Node | None, prefix: tuple[str, ...]) -> None:
        if isinstance(node, MappingNode):
            for key_node, value_node in node.value:
                path = (*prefix, str(key_node.value))
                lines[path] = key_node.start_mark.line + 1
                walk(value_node, path)
        elif isinstance(node, SequenceNode):
            for idx, item in enumerate(node.value):
                walk(item, (*prefix, str(idx)))

    walk(root, ())
    return lines


def encode_yaml(raw_data: Any) -> str:
    """Encode a Python object into a YAML string.

    Args:
        raw_data (Any): The Python object to encode.

    Returns:
        str: The encoded YAML string.
    """
    return yaml.dump(raw_data, Dumper=PureDumper, allow_unicode=True, sort_keys=False)
