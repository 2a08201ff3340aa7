"""This module provides the YAML loader used for experiment configs."""

from __future__ import annotations

from typing import Any

from yaml import SafeLoader

from .constructors import yaml_construct_unique_mapping


class PureLoader(SafeLoader):
    """Safe YAML loader that rejects duplicate mapping keys."""

    def __init__(self, stream: Any) -> None:
        """Initialize the loader with the unique-mapping constructor.

        Args:
            stream (Any): The input stream containing YAML data.
        """
        super().__init__(stream)
        self.add_constructor("tag:yaml.org,2002:map", yaml_construct_unique_mapping)
