"""Configuration Utilities.

This module reads experiment configs written in YAML, TOML or JSON and hands
them to the experiment layer as :class:`ConfigSection` objects. Keys are
normalized (``recordEvery``, ``record-every`` and ``record_every`` are one
key), values are coerced through :mod:`policy_mixtures.type_utils`, and every
problem is reported as a :class:`~policy_mixtures.exceptions.ConfigError`
anchored to the offending line.
"""

from __future__ import annotations

import logging
import os
import re
import sys

from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union


if sys.version_info >= (3, 10):
    from typing import TypeAlias
else:
    from typing_extensions import TypeAlias

import inflection
import yaml

from orjson import JSONDecodeError
from tomlkit.exceptions import ParseError, TOMLKitError

from .exceptions import ConfigError
from .json_utils import decode_json
from .toml_utils import decode_toml
from .type_utils import ConversionError, coerce_float_list, coerce_value
from .yaml_utils import decode_yaml, yaml_key_lines


logger = logging.getLogger(__name__)

FilePath: TypeAlias = Union[str, os.PathLike[str]]
"""Paths accepted by the config and cache readers."""

CONFIG_FORMATS: dict[str, str] = {
    ".yaml": "yaml",
    ".yml": "yaml",
    ".toml": "toml",
    ".json": "json",
}

_MISSING = object()


def normalize_key(key: str) -> str:
    """Normalizes a config key to snake case.

    Args:
        key (str): A key in camelCase, kebab-case or snake_case.

    Returns:
        str: The snake_case key.
    """
    return inflection.underscore(str(key).strip().replace("-", "_"))


def detect_format(path: FilePath) -> str:
    """Returns the config format implied by the file suffix.

    Args:
        path (FilePath): The config file path.

    Returns:
        str: ``yaml``, ``toml`` or ``json``.

    Raises:
        ConfigError: If the suffix is not recognized.
    """
    suffix = Path(path).suffix.lower()
    try:
        return CONFIG_FORMATS[suffix]
    except KeyError:
        raise ConfigError(
            f"Unsupported config format {suffix or '<none>'!r}; expected one of {sorted(CONFIG_FORMATS)}",
            path=str(path),
        ) from None


def _scan_key_lines(text: str, data: Any) -> dict[tuple[str, ...], int]:
    lines: dict[tuple[str, ...], int] = {}
    starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def line_of(offset: int) -> int:
        lo, hi = 0, len(starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1

    def walk(node: Any, prefix: tuple[str, ...], cursor: int) -> None:
        if isinstance(node, Mapping):
            for key, value in node.items():
                pattern = re.compile(
                    rf"""(^|[\s{{,.\[])["']?{re.escape(str(key))}["']?\s*[:=\]]""",
                    re.MULTILINE,
                )
                match = pattern.search(text, cursor) or pattern.search(text)
                path = (*prefix, str(key))
                position = match.start() if match else cursor
                if match:
                    lines[path] = line_of(match.start())
                walk(value, path, position)
        elif isinstance(node, list):
            for idx, item in enumerate(node):
                walk(item, (*prefix, str(idx)), cursor)

    walk(data, (), 0)
    return lines


@dataclass
class ConfigSource:
    """Where a config came from, and the line of each key path.

    Attributes:
        path (str | None): The file path, or ``None`` for in-memory configs.
        key_lines (dict[tuple[str, ...], int]): Normalized key paths mapped to lines.
    """

    path: str | None = None
    key_lines: dict[tuple[str, ...], int] = field(default_factory=dict)

    def line_for(self, keys: tuple[str, ...]) -> int | None:
        """Returns the line of the longest known prefix of ``keys``."""
        for end in range(len(keys), 0, -1):
            line = self.key_lines.get(keys[:end])
            if line is not None:
                return line
        return None

    def error(self, message: str, keys: tuple[str, ...] = ()) -> ConfigError:
        """Builds a line-anchored :class:`ConfigError` for ``keys``."""
        return ConfigError(
            message,
            path=self.path,
            line=self.line_for(keys),
            key=".".join(keys) or None,
        )


class ConfigSection:
    """A normalized view of one mapping in an experiment config.

    Every key read through :meth:`get`, :meth:`section` or :meth:`raw` is
    marked as consumed; :meth:`finish` rejects whatever was left over.

    Args:
        data (Mapping[str, Any]): The decoded mapping.
        source (ConfigSource | None): Line information for error messages.
        prefix (tuple[str, ...]): Normalized key path of this section.
    """

    def __init__(
        self,
        data: Mapping[str, Any] | None = None,
        source: ConfigSource | None = None,
        prefix: tuple[str, ...] = (),
    ):
        """Initializes the section and normalizes its keys.

        Args:
            data (Mapping[str, Any] | None): The decoded mapping.
            source (ConfigSource | None): Line information for error messages.
            prefix (tuple[str, ...]): Normalized key path of this section.

        Raises:
            ConfigError: If two spellings normalize to the same key.
        """
        self.source = source or ConfigSource()
        self.prefix = prefix
        self._data: dict[str, Any] = {}
        for key, value in (data or {}).items():
            norm = normalize_key(key)
            if norm in self._data:
                raise self.source.error(f"Duplicate key {norm!r} after normalization", (*prefix, norm))
            self._data[norm] = value
        self._consumed: set[str] = set()

    def __contains__(self, key: str) -> bool:
        """Returns whether the normalized ``key`` is present."""
        return normalize_key(key) in self._data

    def keys(self) -> list[str]:
        """Returns the normalized keys in document order."""
        return list(self._data)

    def error(self, message: str, key: str | None = None) -> ConfigError:
        """Builds an error anchored at ``key`` in this section."""
        keys = self.prefix if key is None else (*self.prefix, normalize_key(key))
        return self.source.error(message, keys)

    def raw(self, key: str, default: Any = _MISSING) -> Any:
        """Returns the undecoded value of ``key``.

        Raises:
            ConfigError: If the key is absent and no default is given.
        """
        norm = normalize_key(key)
        self._consumed.add(norm)
        if norm in self._data:
            return self._data[norm]
        if default is _MISSING:
            raise self.error(f"Missing required key {'.'.join((*self.prefix, norm))!r}")
        return default

    def get(self, key: str, expected_type: type, default: Any = _MISSING) -> Any:
        """Returns ``key`` coerced to ``expected_type``.

        Args:
            key (str): The key to read.
            expected_type (type): ``bool``, ``int``, ``float``, ``str`` or ``Path``.
            default (Any): Returned when the key is absent.

        Returns:
            Any: The coerced value or the default.

        Raises:
            ConfigError: If the key is missing without default or has the wrong type.
        """
        value = self.raw(key, default)
        if value is default and normalize_key(key) not in self._data:
            return default
        try:
            return coerce_value(expected_type, value)
        except ConversionError as exc:
            raise self.error(f"Key {normalize_key(key)!r}: {exc}", key) from exc

    def get_floats(self, key: str, default: Any = _MISSING) -> Any:
        """Returns ``key`` as a list of floats, accepting a scalar as a one-element list."""
        value = self.raw(key, default)
        if value is default and normalize_key(key) not in self._data:
            return default
        try:
            return coerce_float_list(value)
        except ConversionError as exc:
            raise self.error(f"Key {normalize_key(key)!r}: {exc}", key) from exc

    def section(self, key: str, required: bool = False) -> ConfigSection:
        """Returns the nested mapping at ``key`` as a section.

        Args:
            key (str): The key to read.
            required (bool): Whether an absent key is an error.

        Returns:
            ConfigSection: The nested section, empty when absent and not required.

        Raises:
            ConfigError: If the value is not a mapping, or is required and missing.
        """
        norm = normalize_key(key)
        value = self.raw(key, _MISSING if required else None)
        if value is None:
            return ConfigSection({}, self.source, (*self.prefix, norm))
        if not isinstance(value, Mapping):
            raise self.error(f"Key {norm!r} must be a mapping", key)
        return ConfigSection(value, self.source, (*self.prefix, norm))

    def sections(self, key: str) -> list[ConfigSection]:
        """Returns the list of mappings at ``key`` as sections (empty when absent)."""
        norm = normalize_key(key)
        value = self.raw(key, [])
        if not isinstance(value, list):
            raise self.error(f"Key {norm!r} must be a list", key)
        sections = []
        for idx, item in enumerate(value):
            if not isinstance(item, Mapping):
                raise self.error(f"Item {idx} of {norm!r} must be a mapping", key)
            sections.append(ConfigSection(item, self.source, (*self.prefix, norm, str(idx))))
        return sections

    def finish(self) -> None:
        """Rejects keys that were never read.

        Raises:
            ConfigError: Naming the first unknown key, anchored at its line.
        """
        unknown = [key for key in self._data if key not in self._consumed]
        if unknown:
            name = ".".join((*self.prefix, unknown[0]))
            raise self.error(f"Unknown key {name!r}", unknown[0])


def parse_config_text(text: str, fmt: str, path: str | None = None) -> ConfigSection:
    """Decodes config text into a root :class:`ConfigSection`.

    Args:
        text (str): The document.
        fmt (str): ``yaml``, ``toml`` or ``json``.
        path (str | None): The file the text came from, for messages.

    Returns:
        ConfigSection: The root section.

    Raises:
        ConfigError: If the document does not parse or is not a mapping.
    """
    try:
        if fmt == "yaml":
            data = decode_yaml(text)
            raw_lines = yaml_key_lines(text)
        elif fmt == "toml":
            data = decode_toml(text)
            raw_lines = _scan_key_lines(text, data)
        elif fmt == "json":
            data = decode_json(text)
            raw_lines = _scan_key_lines(text, data)
        else:
            raise ConfigError(f"Unsupported config format {fmt!r}", path=path)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"Invalid YAML: {exc.problem or exc}", path=path, line=line) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"Invalid YAML: {exc}", path=path) from exc
    except ParseError as exc:
        raise ConfigError(f"Invalid TOML: {exc}", path=path, line=exc.line) from exc
    except TOMLKitError as exc:
        raise ConfigError(f"Invalid TOML: {exc}", path=path) from exc
    except JSONDecodeError as exc:
        raise ConfigError(f"Invalid JSON: {exc.msg}", path=path, line=exc.lineno) from exc

    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError("Config root must be a mapping", path=path, line=1)

    key_lines = {tuple(normalize_key(k) for k in keys): line for keys, line in raw_lines.items()}
    return ConfigSection(data, ConfigSource(path, key_lines))


def load_config(path: FilePath) -> ConfigSection:
    """Reads and decodes a config file.

    Args:
        path (FilePath): A ``.yaml``, ``.yml``, ``.toml`` or ``.json`` file.

    Returns:
        ConfigSection: The root section.

    Raises:
        ConfigError: If the file is missing, unreadable, or malformed.
    """
    fmt = detect_format(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"Cannot read config: {exc}", path=str(path)) from exc
    logger.info("Loading %s config from %s", fmt, path)
    return parse_config_text(text, fmt, str(path))
