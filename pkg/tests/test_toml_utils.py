"""Test Suite for TOML Utilities.

This module contains test functions for verifying the functionality of TOML decoding
and encoding using the `policy_mixtures` package.

Functions:
    - test_decode_toml_invalid_format: Tests decoding of TOML with syntax errors.
    - test_decode_toml_plain_containers: Tests that decoded documents hold plain Python values.
    - test_decode_toml_bytes: Tests decoding of UTF-8 bytes.
    - test_encode_toml: Tests that encoded documents decode back to the same mapping.
"""

from __future__ import annotations

import pytest
import tomlkit

from policy_mixtures.toml_utils import decode_toml, encode_toml


def test_decode_toml_invalid_format() -> None:
    """Tests the `decode_toml` function with an invalid TOML format.

    Asserts:
        The function raises `tomlkit.exceptions.ParseError` when decoding
        a string with an unclosed quote.
    """
    invalid_toml = "title = 'Unclosed quote"
    with pytest.raises(tomlkit.exceptions.ParseError):
        decode_toml(invalid_toml)


def test_decode_toml_plain_containers() -> None:
    """Tests that decoded documents hold plain Python values.

    Asserts:
        Tables become dicts and arrays become lists of floats.
    """
    result = decode_toml('seed = 7\n[sgd]\nT = 1000\n[environment]\nservice_rates = [0.12, 0.28]\n')
    assert result == {"seed": 7, "sgd": {"T": 1000}, "environment": {"service_rates": [0.12, 0.28]}}
    assert type(result["environment"]) is dict
    assert type(result["environment"]["service_rates"]) is list


def test_decode_toml_bytes() -> None:
    """Tests decoding of UTF-8 bytes.

    Asserts:
        Bytes decode to the same mapping as the equivalent string.
    """
    assert decode_toml(b"method = 'dual-sgd'\n") == {"method": "dual-sgd"}


def test_encode_toml() -> None:
    """Tests that encoded documents decode back to the same mapping.

    Asserts:
        decode_toml(encode_toml(data)) equals data.
    """
    data = {"method": "primal-fd", "primal": {"iterations": 50, "eta": 0.1}}
    assert decode_toml(encode_toml(data)) == data
