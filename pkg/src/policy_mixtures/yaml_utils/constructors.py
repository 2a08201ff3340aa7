"""This module provides constructors used by the configuration YAML loader.

Experiment configs must not silently drop repeated keys, so mappings are
constructed through :func:`yaml_construct_unique_mapping`.
"""

from __future__ import annotations

from typing import Any

from yaml import MappingNode, SafeLoader
from yaml.constructor import ConstructorError


def yaml_construct_unique_mapping(loader: SafeLoader, node: MappingNode) -> dict[Any, Any]:
    """Construct a mapping, rejecting duplicate keys.

    Args:
        loader (SafeLoader): The YAML loader.
        node (MappingNode): The YAML mapping node.

    Returns:
        dict[Any, Any]: The constructed mapping.

    Raises:
        ConstructorError: If a key appears twice; the problem mark points at
            the second occurrence.
    """
    loader.flatten_mapping(node)
    mapping: dict[Any, Any] = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in mapping:
            raise ConstructorError(
                "while constructing a mapping",
                node.start_mark,
                f"found duplicate key {key!r}",
                key_node.start_mark,
            )
        mapping[key] = loader.construct_object(value_node, deep=True)
    return mapping
