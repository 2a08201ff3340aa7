"""This module provides utilities for handling YAML data.

It includes the config loader, the summary dumper, and helper functions.
"""

from .constructors import yaml_construct_unique_mapping
from .dumpers import PureDumper
from .loaders import PureLoader
from .representers import (
    yaml_float_representer,
    yaml_numpy_representer,
    yaml_str_representer,
)
from .utils import decode_yaml, encode_yaml, yaml_key_lines


__all__ = [
    "PureDumper",
    "PureLoader",
    "decode_yaml",
    "encode_yaml",
    "yaml_construct_unique_mapping",
    "yaml_float_representer",
    "yaml_key_lines",
    "yaml_numpy_representer",
    "yaml_str_representer",
]
