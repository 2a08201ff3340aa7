"""Stable-set reduction to mixture-policy optimization.

A graph on ``m`` vertices becomes a deterministic MDP with ``m + 3`` states and
``m`` base policies such that the mixture with weights ``w`` has discounted
cost ``(1 - gamma) gamma^2 w^T (I + G) w``. By the Motzkin-Straus identity the
minimum of ``w^T (I + G) w`` over the simplex is ``1 / alpha(G)``, where
``alpha`` is the independence number, so deciding whether some mixture reaches
``(1 - gamma) gamma^2 / j`` decides whether the graph has an independent set
of size ``j``.

State layout: ``0`` is the start, ``1..m`` are the vertex states, ``m + 1``
is the cost state and ``m + 2`` absorbs.
"""

from __future__ import annotations

import functools
import logging
import math

from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .config_utils import FilePath
from .exceptions import InvalidInputError
from .mdp_data_type import FloatArray, StationaryPolicy, TabularMdp
from .mixture_data_type import MixtureWeight, PolicyBasis


logger = logging.getLogger(__name__)

MAX_BRUTE_FORCE_VERTICES = 20
MAX_LATTICE_VERTICES = 8
LATTICE_CHUNK = 200_000
DECISION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Graph:
    """A simple undirected graph.

    Attributes:
        adjacency (np.ndarray): Symmetric 0-1 matrix with zero diagonal.
    """

    adjacency: np.ndarray

    def __post_init__(self) -> None:
        """Validates the adjacency matrix.

        Raises:
            InvalidInputError: If it is not square, symmetric, 0-1 or has loops.
        """
        matrix = np.array(self.adjacency, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise InvalidInputError(f"Adjacency must be a non-empty square matrix, got shape {matrix.shape}")
        if not np.isin(matrix, (0, 1)).all():
            raise InvalidInputError("Adjacency entries must be 0 or 1")
        if not np.array_equal(matrix, matrix.T):
            raise InvalidInputError("Adjacency must be symmetric")
        if np.any(np.diag(matrix)):
            raise InvalidInputError("Adjacency must have a zero diagonal")
        matrix.setflags(write=False)
        object.__setattr__(self, "adjacency", matrix)

    @property
    def num_vertices(self) -> int:
        """Number of vertices ``m``."""
        return int(self.adjacency.shape[0])

    @property
    def quadratic_form(self) -> FloatArray:
        """Returns ``I + G``."""
        return np.eye(self.num_vertices) + self.adjacency

    def edges(self) -> list[tuple[int, int]]:
        """Returns the edges ``(u, v)`` with ``u < v``."""
        rows, cols = np.nonzero(np.triu(self.adjacency))
        return [(int(u), int(v)) for u, v in zip(rows, cols)]

    @classmethod
    def from_edges(cls, num_vertices: int, edges: Iterable[tuple[int, int]]) -> Graph:
        """Builds a graph from 0-indexed edge pairs.

        Raises:
            InvalidInputError: On an out-of-range vertex or a self-loop.
        """
        if num_vertices < 1:
            raise InvalidInputError(f"A graph needs at least one vertex, got {num_vertices}")
        matrix = np.zeros((num_vertices, num_vertices), dtype=np.int64)
        for u, v in edges:
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise InvalidInputError(f"Edge ({u}, {v}) is out of range for {num_vertices} vertices")
            if u == v:
                raise InvalidInputError(f"Self-loop at vertex {u}")
            matrix[u, v] = matrix[v, u] = 1
        return cls(matrix)


def empty_graph(num_vertices: int) -> Graph:
    """Graph with no edges."""
    return Graph.from_edges(num_vertices, [])


def complete_graph(num_vertices: int) -> Graph:
    """Graph with every edge."""
    return Graph.from_edges(
        num_vertices, [(u, v) for u in range(num_vertices) for v in range(u + 1, num_vertices)]
    )


def cycle_graph(num_vertices: int) -> Graph:
    """Cycle ``0 - 1 - ... - (m-1) - 0``; needs at least three vertices."""
    if num_vertices < 3:
        raise InvalidInputError(f"A cycle needs at least 3 vertices, got {num_vertices}")
    return Graph.from_edges(num_vertices, [(v, (v + 1) % num_vertices) for v in range(num_vertices)])


def read_graph(path: FilePath) -> Graph:
    """Reads an edge-list file.

    The first non-blank line holds ``m``; every further line holds a 0-indexed
    pair ``u v``. Text after ``#`` is ignored.

    Raises:
        InvalidInputError: With the file and line of the first malformed entry.
    """
    num_vertices: int | None = None
    edges = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            numbers = [int(field) for field in fields]
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: expected integers, got {raw!r}") from None
        if num_vertices is None:
            if len(numbers) != 1:
                raise InvalidInputError(f"{path}:{lineno}: first line must hold the vertex count")
            num_vertices = numbers[0]
            continue
        if len(numbers) != 2:
            raise InvalidInputError(f"{path}:{lineno}: expected 'u v', got {raw!r}")
        if not all(0 <= n < num_vertices for n in numbers) or numbers[0] == numbers[1]:
            raise InvalidInputError(f"{path}:{lineno}: invalid edge {raw.strip()!r}")
        edges.append((numbers[0], numbers[1]))
    if num_vertices is None:
        raise InvalidInputError(f"{path}: empty graph file")
    return Graph.from_edges(num_vertices, edges)


def reduction_mdp(graph: Graph, gamma: float) -> tuple[TabularMdp, PolicyBasis]:
    """Builds the reduction MDP and its ``m`` deterministic base policies.

    Policy ``i`` takes action ``i`` everywhere. From the start, action
    ``a < m`` enters vertex state ``a + 1``; from vertex state ``k``, action
    ``a < m`` moves to the cost state when ``(I + G)[k - 1, a] = 1`` and to the
    absorbing state otherwise. The remaining actions and states lead to the
    absorbing state. Cost is 1 in the cost state and 0 elsewhere.

    Args:
        graph (Graph): The input graph.
        gamma (float): Discount factor in ``(0, 1)``.

    Returns:
        tuple[TabularMdp, PolicyBasis]: The MDP and the base policies.
    """
    m = graph.num_vertices
    num_states = num_actions = m + 3
    cost_state, sink = m + 1, m + 2
    form = graph.quadratic_form

    transition = np.zeros((num_states, num_actions, num_states))
    transition[:, :, sink] = 1.0
    for a in range(m):
        transition[0, a, :] = 0.0
        transition[0, a, a + 1] = 1.0
        for k in range(1, m + 1):
            if form[k - 1, a] == 1:
                transition[k, a, :] = 0.0
                transition[k, a, cost_state] = 1.0

    cost = np.zeros((num_states, num_actions))
    cost[cost_state, :] = 1.0
    alpha = np.zeros(num_states)
    alpha[0] = 1.0

    mdp = TabularMdp(num_states, num_actions, cost, transition, alpha, gamma)
    basis = PolicyBasis(
        StationaryPolicy.deterministic(np.full(num_states, i), num_actions) for i in range(m)
    )
    return mdp, basis


def mixture_cost_closed_form(graph: Graph, weight: MixtureWeight | Any, gamma: float) -> float:
    """Returns ``(1 - gamma) gamma^2 w^T (I + G) w``."""
    w = weight.w if isinstance(weight, MixtureWeight) else np.asarray(weight, dtype=np.float64)
    return float((1.0 - gamma) * gamma**2 * (w @ graph.quadratic_form @ w))


def independence_number(graph: Graph) -> int:
    """Returns the size of a maximum independent set by branch and bound.

    Raises:
        InvalidInputError: If the graph has more than 20 vertices.
    """
    m = graph.num_vertices
    if m > MAX_BRUTE_FORCE_VERTICES:
        raise InvalidInputError(f"Brute force supports at most {MAX_BRUTE_FORCE_VERTICES} vertices, got {m}")
    closed = [
        (1 << v) | sum(1 << int(u) for u in np.flatnonzero(graph.adjacency[v])) for v in range(m)
    ]
    best = 0

    def search(candidates: int, size: int) -> None:
        nonlocal best
        if candidates == 0:
            best = max(best, size)
            return
        if size + bin(candidates).count("1") <= best:
            return
        v = (candidates & -candidates).bit_length() - 1
        search(candidates & ~closed[v], size + 1)
        search(candidates & ~(1 << v), size)

    search((1 << m) - 1, 0)
    return best


@functools.lru_cache(maxsize=32)
def _compositions(parts: int, total: int) -> np.ndarray:
    # level[t] holds every composition of t into the current number of parts
    level = {t: np.array([[t]], dtype=np.int16) for t in range(total + 1)}
    for current in range(2, parts + 1):
        sums = [total] if current == parts else range(total + 1)
        level = {
            t: np.concatenate(
                [
                    np.column_stack([np.full(level[t - first].shape[0], first, dtype=np.int16), level[t - first]])
                    for first in range(t, -1, -1)
                ]
            )
            for t in sums
        }
    result = level[total]
    result.setflags(write=False)
    return result


def simplex_lattice(size: int, divisions: int) -> np.ndarray:
    """Returns every point of the simplex whose coordinates are multiples of ``1/divisions``.

    Args:
        size (int): Dimension ``m``.
        divisions (int): Lattice denominator, at least 1.

    Returns:
        np.ndarray: ``N x m`` array of points, ``N = C(divisions + m - 1, m - 1)``.
    """
    if size < 1 or divisions < 1:
        raise InvalidInputError(f"Lattice needs size >= 1 and divisions >= 1, got {size}, {divisions}")
    return _compositions(size, divisions) / float(divisions)


def _composition_blocks(parts: int, total: int, prefix: tuple[int, ...] = ()) -> Iterator[np.ndarray]:
    # only sub-lattices of at most LATTICE_CHUNK rows are ever materialized
    if parts == 1 or math.comb(total + parts - 1, parts - 1) <= LATTICE_CHUNK:
        tail = _compositions(parts, total)
        head = np.tile(np.asarray(prefix, dtype=np.int16), (tail.shape[0], 1))
        yield np.hstack([head, tail])
        return
    for first in range(total, -1, -1):
        yield from _composition_blocks(parts - 1, total - first, (*prefix, first))


def _lattice_chunks(size: int, divisions: int) -> Iterator[np.ndarray]:
    pending: list[np.ndarray] = []
    rows = 0
    for block in _composition_blocks(size, divisions):
        pending.append(block)
        rows += block.shape[0]
        if rows >= LATTICE_CHUNK:
            yield np.concatenate(pending) / float(divisions)
            pending, rows = [], 0
    if pending:
        yield np.concatenate(pending) / float(divisions)


def _divisions_for(resolution: float) -> int:
    if not resolution > 0:
        raise InvalidInputError(f"Resolution must be positive, got {resolution!r}")
    return max(1, round(1.0 / resolution))


def _check_lattice_size(graph: Graph) -> None:
    if graph.num_vertices > MAX_LATTICE_VERTICES:
        raise InvalidInputError(
            f"Lattice search supports at most {MAX_LATTICE_VERTICES} vertices, got {graph.num_vertices}"
        )


def motzkin_straus_min(graph: Graph, resolution: float) -> float:
    """Minimizes ``y^T (I + G) y`` over the simplex lattice of spacing ``resolution``.

    The lattice minimum is an upper bound on ``1 / alpha(G)`` that tightens as
    the resolution shrinks.

    Raises:
        InvalidInputError: For more than 8 vertices or a non-positive resolution.
    """
    _check_lattice_size(graph)
    divisions = _divisions_for(resolution)
    form = graph.quadratic_form
    best = math.inf
    for points in _lattice_chunks(graph.num_vertices, divisions):
        values = np.einsum("ni,ij,nj->n", points, form, points)
        best = min(best, float(values.min()))
    return best


def stable_set_decision(
    graph: Graph,
    target: int,
    gamma: float,
    resolution: float = 0.02,
) -> tuple[bool, MixtureWeight | None]:
    """Decides whether some mixture reaches cost ``(1 - gamma) gamma^2 / target``.

    The lattice denominator is rounded up to a multiple of ``target`` so that
    the uniform weights on any independent set of that size are lattice
    points; the answer therefore equals ``alpha(G) >= target``.

    Args:
        graph (Graph): The input graph.
        target (int): Independent-set size ``j``.
        gamma (float): Discount factor.
        resolution (float): Lattice spacing upper bound.

    Returns:
        tuple[bool, MixtureWeight | None]: The decision and a witness weight.
    """
    _check_lattice_size(graph)
    if not 1 <= target <= graph.num_vertices:
        raise InvalidInputError(f"Target must lie in [1, {graph.num_vertices}], got {target}")
    divisions = target * math.ceil(_divisions_for(resolution) / target)
    threshold = (1.0 - gamma) * gamma**2 / target
    scale = (1.0 - gamma) * gamma**2
    form = graph.quadratic_form
    for points in _lattice_chunks(graph.num_vertices, divisions):
        values = scale * np.einsum("ni,ij,nj->n", points, form, points)
        hits = np.flatnonzero(values <= threshold + DECISION_TOL)
        if hits.size:
            return True, MixtureWeight.on_simplex(points[hits[0]])
    return False, None
