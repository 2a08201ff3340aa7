"""This module provides custom representers for YAML serialization.

Result summaries print every real number with 17 significant digits so that
values survive a text round trip bit for bit.
"""

from __future__ import annotations

import math

from typing import TYPE_CHECKING, Any

import numpy as np


if TYPE_CHECKING:
    from yaml import Node, SafeDumper, ScalarNode


def yaml_float_representer(dumper: SafeDumper, data: float) -> ScalarNode:
    """Represent a float with 17 significant digits.

    Args:
        dumper (SafeDumper): The YAML dumper.
        data (float): The float to represent.

    Returns:
        ScalarNode: The represented YAML node.
    """
    value = float(data)
    if math.isnan(value):
        text = ".nan"
    elif math.isinf(value):
        text = ".inf" if value > 0 else "-.inf"
    else:
        # the YAML 1.1 float resolver needs a dot in the mantissa
        mantissa, sep, exponent = f"{value:.17g}".partition("e")
        if "." not in mantissa:
            mantissa += ".0"
        text = f"{mantissa}{sep}{exponent}"
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


def yaml_numpy_representer(dumper: SafeDumper, data: Any) -> Node:
    """Represent numpy scalars and arrays through their Python equivalents.

    Args:
        dumper (SafeDumper): The YAML dumper.
        data (Any): A numpy scalar or array.

    Returns:
        Node: The represented YAML node.
    """
    if isinstance(data, np.ndarray):
        return dumper.represent_list(data.tolist())
    if isinstance(data, np.floating):
        return yaml_float_representer(dumper, float(data))
    if isinstance(data, np.bool_):
        return dumper.represent_bool(bool(data))
    return dumper.represent_int(int(data))


def yaml_str_representer(dumper: SafeDumper, data: str) -> ScalarNode:
    """Represent a YAML string.

    Args:
        dumper (SafeDumper): The YAML dumper.
        data (str): The string to represent.

    Returns:
        ScalarNode: The represented YAML node.
    """
    if "\n" in data:
        return dumper.represent_scalar("tag:yaml.org,2002:str", data, style="|")
    if any(char in data for char in ":{}[],&*#?|-><!%@`"):
        return dumper.represent_scalar("tag:yaml.org,2002:str", data, style='"')
    return dumper.represent_scalar("tag:yaml.org,2002:str", data)
