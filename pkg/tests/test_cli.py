"""Test Suite for the Command-Line Entry Point.

This module contains test functions for argument parsing, command dispatch
and the mapping of failures to exit codes.

Fixtures:
    - queue_config: Provides a small single-queue config file.

Functions:
    - test_parser_commands: Tests that every command takes the shared options.
    - test_version_and_missing_command: Tests argparse exits.
    - test_optimize_writes_summary: Tests a successful run and the seed override.
    - test_occupancy_command: Tests the occupancy-only command.
    - test_compare_command: Tests the comparison command.
    - test_config_error_exit: Tests exit code 2 for a bad config.
    - test_hardness_needs_graph: Tests exit code 2 for a non-graph hardness run.
    - test_hardness_command: Tests the hardness command on a graph.
    - test_numerical_error_exit: Tests exit code 3 for numerical failures.
"""

from __future__ import annotations

from pathlib import Path

import pytest

from pytest_mock import MockerFixture

from policy_mixtures import __version__
from policy_mixtures.cli import COMMANDS, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, build_parser, main
from policy_mixtures.exceptions import AmbiguousChainError, NumericalError


@pytest.fixture()
def queue_config(tmp_path: Path) -> Path:
    """Provides a small single-queue config file.

    Args:
        tmp_path (Path): Pytest temporary directory.

    Returns:
        Path: A ``dual-sgd`` config over an 11-state queue writing to ``tmp_path/out``.
    """
    path = tmp_path / "queue.yaml"
    path.write_text(
        "seed: 7\nmethod: dual-sgd\n"
        "environment:\n  kind: single-queue\n  capacity: 10\n  action_weight: 1.0\n"
        f"sgd:\n  T: 100\n  S: 1.0\ncompare:\n  steps: 5\noutput_dir: {tmp_path / 'out'}\n",
        encoding="utf-8",
    )
    return path


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_parser_commands(command: str) -> None:
    """Tests that every command takes the shared options."""
    args = build_parser().parse_args([command, "--config", "c.yaml", "--seed", "3", "--log-level", "debug", "-v"])
    assert args.command == command
    assert args.config == "c.yaml"
    assert args.seed == 3
    assert args.log_level == "DEBUG"
    assert args.verbose


def test_version_and_missing_command(capsys: pytest.CaptureFixture[str]) -> None:
    """Tests argparse exits.

    Args:
        capsys (pytest.CaptureFixture[str]): Output capture.

    Asserts:
        ``--version`` exits 0 with the version and a missing command exits 2.
    """
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert __version__ in capsys.readouterr().out
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2


def test_optimize_writes_summary(queue_config: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Tests a successful run and the seed override.

    Args:
        queue_config (Path): The config provided by the fixture.
        tmp_path (Path): Pytest temporary directory.
        capsys (pytest.CaptureFixture[str]): Output capture.

    Asserts:
        The summary goes to stdout and the artifacts to the output directory.
    """
    assert main(["optimize", "--config", str(queue_config), "--seed", "11"]) == EXIT_OK
    out = capsys.readouterr().out
    assert 'method: "dual-sgd"' in out
    assert "seed: 11" in out
    assert (tmp_path / "out" / "summary.txt").is_file()
    assert (tmp_path / "out" / "trace.csv").is_file()


def test_occupancy_command(queue_config: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Tests the occupancy-only command.

    Args:
        queue_config (Path): The config provided by the fixture.
        tmp_path (Path): Pytest temporary directory.
        capsys (pytest.CaptureFixture[str]): Output capture.

    Asserts:
        Only the occupancy file is written, to the ``--out`` directory.
    """
    target = tmp_path / "elsewhere"
    assert main(["occupancy", "--config", str(queue_config), "--out", str(target)]) == EXIT_OK
    assert sorted(path.name for path in target.iterdir()) == ["occupancies.txt"]
    assert "occupancies.txt" in capsys.readouterr().out


def test_compare_command(queue_config: Path, tmp_path: Path) -> None:
    """Tests the comparison command.

    Args:
        queue_config (Path): The config provided by the fixture.
        tmp_path (Path): Pytest temporary directory.

    Asserts:
        ``compare.csv`` is written.
    """
    assert main(["compare", "--config", str(queue_config)]) == EXIT_OK
    assert (tmp_path / "out" / "compare.csv").is_file()


def test_config_error_exit(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Tests exit code 2 for a bad config.

    Args:
        tmp_path (Path): Pytest temporary directory.
        capsys (pytest.CaptureFixture[str]): Output capture.

    Asserts:
        Unknown methods and missing files are reported on stderr with their location.
    """
    path = tmp_path / "bad.yaml"
    path.write_text("seed: 1\nmethod: magic\nenvironment:\n  kind: single-queue\n", encoding="utf-8")
    assert main(["optimize", "--config", str(path)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith("policy-mixtures: error: ")
    assert f"{path}:2: Unknown method" in err
    assert main(["optimize", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["optimize", "--config", str(tmp_path / "config.ini")]) == EXIT_CONFIG


def test_hardness_needs_graph(queue_config: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Tests exit code 2 for a non-graph hardness run.

    Args:
        queue_config (Path): The config provided by the fixture.
        capsys (pytest.CaptureFixture[str]): Output capture.

    Asserts:
        The hardness command refuses a queueing environment.
    """
    assert main(["hardness", "--config", str(queue_config)]) == EXIT_CONFIG
    assert "needs a graph environment" in capsys.readouterr().err


def test_hardness_command(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Tests the hardness command on a graph.

    Args:
        tmp_path (Path): Pytest temporary directory.
        capsys (pytest.CaptureFixture[str]): Output capture.

    Asserts:
        A config with another method still runs the reduction checks.
    """
    path = tmp_path / "graph.yaml"
    path.write_text(
        "seed: 1\nmethod: dual-sgd\nenvironment:\n  kind: graph\n  vertices: 4\n"
        "  edges: [[0, 1], [2, 3]]\nhardness:\n  resolution: 0.25\n",
        encoding="utf-8",
    )
    assert main(["hardness", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "independence_number: 2" in out
    assert "largest_decided_target: 2" in out


@pytest.mark.parametrize("error", [NumericalError("solve failed"), AmbiguousChainError("two classes")])
def test_numerical_error_exit(
    queue_config: Path,
    mocker: MockerFixture,
    capsys: pytest.CaptureFixture[str],
    error: Exception,
) -> None:
    """Tests exit code 3 for numerical failures."""
    mocker.patch("policy_mixtures.cli.run_experiment", side_effect=error)
    assert main(["optimize", "--config", str(queue_config)]) == EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert err.startswith("policy-mixtures: numerical failure: ")
    assert str(error) in err
