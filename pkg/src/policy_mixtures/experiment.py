"""Config-driven experiments.

An experiment names an environment, a basis of policies over it and a method:

``primal-fd``
    finite-difference descent over mixture weights,
``dual-sgd``
    the stochastic subgradient method over occupancy combinations,
``dual-grid``
    exhaustive search over a lattice of dual points (at most three policies),
``hardness``
    the stable-set reduction checks on a graph.

Every run writes ``occupancies.txt``, ``trace.csv`` and ``summary.txt`` to the
output directory. Tabular environments are solved exactly; environments with
unbounded queues are simulated.
"""

from __future__ import annotations

import dataclasses
import logging
import time

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .cache_utils import CACHE_FILE, load_matching, write_occupancies
from .config_utils import ConfigSection, FilePath, load_config
from .dual_data_type import (
    DualPoint,
    DualSpace,
    constraint_violation,
    dual_objective,
    min_radius,
    surrogate_loss,
    xi,
)
from .envs import (
    EIGHT_QUEUE_REFERENCE,
    FOUR_QUEUE_REFERENCE,
    REFERENCE_POLICIES,
    EmpiricalOccupancies,
    FamilyRule,
    QueueNetworkConfig,
    QueueNetworkSimulator,
    SingleQueueConfig,
    average_cost,
    eight_queue_config,
    empirical_occupancies,
    four_queue_config,
    make_lookup_evaluator,
    make_simulation_evaluator,
    network_mdp,
    single_queue_basis,
    single_queue_mdp,
    tabulate_rule,
)
from .exceptions import ConfigError, InvalidInputError
from .export_utils import write_csv, wrap_raw_data_for_export
from .hardness_utils import (
    Graph,
    independence_number,
    motzkin_straus_min,
    read_graph,
    reduction_mdp,
    stable_set_decision,
)
from .json_utils import array_hash, canonical_hash
from .mdp_data_type import FloatArray, TabularMdp, exact_occupancy, random_mdp, random_policy, stationary_occupancy
from .mixture_data_type import (
    CRITERIA,
    MixtureWeight,
    PolicyBasis,
    evaluate_policy,
    make_primal_evaluator,
    primal_line_sweep,
)
from .primal_utils import EXACT_STEP, SIMULATION_STEP, primal_descent, step_schedule
from .rollout_utils import child_rng
from .sgd_utils import SgdResult, SgdRun, dual_grid_search, sgd_optimize, tune_u_aware
from .type_utils import ConversionError, coerce_float_list


logger = logging.getLogger(__name__)

METHODS = ("primal-fd", "dual-sgd", "dual-grid", "hardness")
QUEUE_KINDS = ("single-queue", "four-queue", "eight-queue", "network")
ENVIRONMENT_KINDS = (*QUEUE_KINDS, "random", "graph")

TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.txt"
COMPARE_FILE = "compare.csv"
SWEEP_FILE = "sweep.csv"
STATES_FILE = "states.csv"

# discount for roll-out sampling when the environment has no tabular MDP
SIMULATION_DISCOUNT = 0.99


@dataclass(frozen=True)
class RandomMdpSpec:
    """Parameters of a generated MDP; ``seed`` feeds the ``random-mdp`` stream."""

    states: int
    actions: int
    discount: float
    seed: int
    branching: Optional[int] = None


@dataclass(frozen=True)
class GraphSpec:
    """A graph for the stable-set reduction."""

    graph: Graph
    discount: float


EnvironmentSpec = Union[SingleQueueConfig, QueueNetworkConfig, RandomMdpSpec, GraphSpec]


@dataclass(frozen=True)
class PrimalSettings:
    """Finite-difference descent settings.

    ``step`` defaults to the exact or the simulation step depending on the
    environment. ``sweep`` is ``(start, stop, num)`` for an off-simplex line
    sweep over two policies.
    """

    iterations: int = 50
    eta: float = 0.1
    schedule: str = "constant"
    step: Optional[float] = None
    start: Optional[tuple[float, ...]] = None
    sweep: Optional[tuple[float, float, int]] = None


@dataclass(frozen=True)
class DualSettings:
    """Stochastic subgradient settings around an :class:`SgdRun`."""

    run: SgdRun
    u_aware: bool = False
    pilot_rounds: Optional[int] = None
    evaluate: bool = True


@dataclass(frozen=True)
class SimulationSettings:
    """Horizons for simulated environments."""

    horizon: int = 100_000
    occupancy_horizon: int = 200_000
    batches: int = 20


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed experiment.

    Attributes:
        seed (int): Run seed.
        method (str): One of :data:`METHODS`.
        criterion (str): ``discounted`` or ``average``.
        kind (str): Environment kind.
        environment (EnvironmentSpec): Resolved environment parameters.
        basis (tuple[tuple[float, ...], ...]): Per-policy parameters: action
            distributions for the single queue, server probabilities for
            networks; empty for generated and graph environments.
        basis_size (int): Number of base policies.
        primal (PrimalSettings): Primal settings.
        dual (DualSettings): Dual settings.
        grid_resolution (float): Dual grid spacing.
        hardness_resolution (float): Lattice spacing of the hardness checks.
        simulation (SimulationSettings): Simulation horizons.
        compare_steps (int): Rows per method in ``compare.csv``.
        workers (int): Threads for finite differences and roll-outs.
        output_dir (Path): Where artifacts go.
        path (str | None): The config file.
    """

    seed: int
    method: str
    criterion: str
    kind: str
    environment: EnvironmentSpec
    basis: tuple[tuple[float, ...], ...]
    basis_size: int
    primal: PrimalSettings
    dual: DualSettings
    grid_resolution: float = 0.01
    hardness_resolution: float = 0.02
    simulation: SimulationSettings = SimulationSettings()
    compare_steps: int = 20
    workers: int = 1
    output_dir: Path = Path("results")
    path: Optional[str] = None

    @property
    def simulated(self) -> bool:
        """Whether the environment has unbounded queues."""
        return isinstance(self.environment, QueueNetworkConfig) and not self.environment.bounded

    def environment_hash(self) -> str:
        """Canonical hash of the resolved environment."""
        return canonical_hash({"kind": self.kind, **dataclasses.asdict(self.environment)})

    def error(self, message: str) -> ConfigError:
        """Builds an unanchored error for this config file."""
        return ConfigError(message, path=self.path)


def _wrap(section: ConfigSection, key: str, build: Any, *args: Any, **kwargs: Any) -> Any:
    try:
        return build(*args, **kwargs)
    except InvalidInputError as exc:
        raise section.error(str(exc), key) from exc


def _list_value(section: ConfigSection, key: str, required: bool) -> Any:
    value = section.raw(key) if required else section.raw(key, None)
    if value is not None and not isinstance(value, list):
        raise section.error(f"Key {key!r} must be a list", key)
    return value


def _float_rows(
    section: ConfigSection,
    key: str,
    default: Any = None,
    required: bool = False,
    allow_empty: bool = False,
) -> Any:
    value = _list_value(section, key, required)
    if value is None:
        return default
    if not value and not allow_empty:
        raise section.error(f"Key {key!r} must not be empty", key)
    try:
        return tuple(tuple(coerce_float_list(item)) for item in value)
    except ConversionError as exc:
        raise section.error(f"Key {key!r}: {exc}", key) from exc


def _int_rows(
    section: ConfigSection,
    key: str,
    default: Any = None,
    required: bool = False,
    allow_empty: bool = False,
) -> Any:
    rows = _float_rows(section, key, None, required, allow_empty)
    if rows is None:
        return default
    if any(not v.is_integer() for row in rows for v in row):
        raise section.error(f"Key {key!r} must hold integers", key)
    return tuple(tuple(int(v) for v in row) for row in rows)


def _optional_ints(section: ConfigSection, key: str) -> tuple[Optional[int], ...]:
    items: list[Optional[int]] = []
    for item in _list_value(section, key, required=True):
        if item is None or item == -1:
            items.append(None)
        elif isinstance(item, int) and not isinstance(item, bool):
            items.append(item)
        else:
            raise section.error(f"Key {key!r} must hold integers or null, got {item!r}", key)
    return tuple(items)


def _resolve(base_dir: Path, target: Path) -> Path:
    return target if target.is_absolute() else base_dir / target


def _parse_environment(section: ConfigSection, seed: int, base_dir: Path) -> tuple[str, EnvironmentSpec]:
    if "include" in section:
        target = _resolve(base_dir, section.get("include", Path))
        section.finish()
        section = load_config(target)
        base_dir = target.parent

    kind = section.get("kind", str)
    if kind not in ENVIRONMENT_KINDS:
        raise section.error(f"Unknown environment kind {kind!r}; expected one of {ENVIRONMENT_KINDS}", "kind")

    env: EnvironmentSpec
    if kind == "single-queue":
        env = _wrap(
            section, "kind", SingleQueueConfig,
            capacity=section.get("capacity", int, 99),
            arrival_prob=section.get("arrival_prob", float, 0.3),
            service_rates=tuple(section.get_floats("service_rates", list(SingleQueueConfig.service_rates))),
            queue_weight=section.get("queue_weight", float, 1.0),
            action_weight=section.get("action_weight", float, 2500.0),
            discount=section.get("discount", float, 0.99),
        )
    elif kind == "four-queue":
        env = _wrap(
            section, "kind", four_queue_config,
            capacity=section.get("capacity", int, 9),
            service_rates=tuple(section.get_floats("service_rates", [0.12, 0.12, 0.28, 0.28])),
            arrival_rate=section.get("arrival_rate", float, 0.08),
            discount=section.get("discount", float, 0.99),
        )
    elif kind == "eight-queue":
        defaults = eight_queue_config()
        env = _wrap(
            section, "kind", eight_queue_config,
            arrival_rate=section.get("arrival_rate", float, 0.02),
            service_rates=tuple(section.get_floats("service_rates", list(defaults.service_rates))),
            servers=_int_rows(section, "servers", defaults.servers),
        )
    elif kind == "network":
        env = _wrap(
            section, "kind", QueueNetworkConfig,
            capacities=_optional_ints(section, "capacities"),
            arrival_rates=tuple(section.get_floats("arrival_rates")),
            service_rates=tuple(section.get_floats("service_rates")),
            servers=_int_rows(section, "servers", required=True),
            routing=_optional_ints(section, "routing"),
            discount=section.get("discount", float, 0.99),
        )
    elif kind == "random":
        env = RandomMdpSpec(
            states=section.get("states", int),
            actions=section.get("actions", int),
            discount=section.get("discount", float, 0.9),
            seed=seed,
            branching=section.get("branching", int, None),
        )
    else:
        discount = section.get("discount", float, 0.9)
        if "file" in section:
            graph = _wrap(section, "file", read_graph, _resolve(base_dir, section.get("file", Path)))
        else:
            edges = _int_rows(section, "edges", (), allow_empty=True)
            graph = _wrap(section, "edges", Graph.from_edges, section.get("vertices", int), edges)
        env = GraphSpec(graph, discount)
    section.finish()
    return kind, env


def _parse_basis(section: ConfigSection, kind: str, environment: EnvironmentSpec) -> tuple[tuple[tuple[float, ...], ...], int]:
    if kind == "single-queue":
        rows = _float_rows(section, "action_probs", REFERENCE_POLICIES)
    elif kind == "four-queue":
        rows = _float_rows(section, "family", tuple((p1, p2) for p1, p2, _ in FOUR_QUEUE_REFERENCE))
    elif kind == "eight-queue":
        rows = _float_rows(section, "family", tuple((p1, p2, p3) for p1, p2, p3, _, _ in EIGHT_QUEUE_REFERENCE))
    elif kind == "network":
        rows = _float_rows(section, "family", required=True)
    elif kind == "random":
        size = section.get("size", int, 2)
        if size < 1:
            raise section.error(f"Basis size must be at least 1, got {size}", "size")
        section.finish()
        return (), size
    else:
        assert isinstance(environment, GraphSpec)
        section.finish()
        return (), environment.graph.num_vertices
    section.finish()
    return rows, len(rows)


def _parse_primal(section: ConfigSection) -> PrimalSettings:
    start = section.get_floats("start", None)
    sweep = None
    if "sweep" in section:
        sub = section.section("sweep")
        sweep = (sub.get("start", float), sub.get("stop", float), sub.get("num", int))
        if sweep[2] < 1:
            raise sub.error("Sweep needs at least one point", "num")
        sub.finish()
    settings = PrimalSettings(
        iterations=section.get("iterations", int, 50),
        eta=section.get("eta", float, 0.1),
        schedule=section.get("schedule", str, "constant"),
        step=section.get("step", float, None),
        start=None if start is None else tuple(start),
        sweep=sweep,
    )
    _wrap(section, "schedule", step_schedule, settings.schedule, settings.eta)
    if settings.iterations < 1:
        raise section.error(f"iterations must be at least 1, got {settings.iterations}", "iterations")
    section.finish()
    return settings


def _parse_dual(section: ConfigSection, seed: int, size: int) -> DualSettings:
    rounds = section.get("T", int, 10_000)
    run = _wrap(
        section, "T", SgdRun,
        num_rounds=rounds,
        radius=section.get("S", float, max(3.0, min_radius(size))),
        seed=section.get("seed", int, seed),
        penalty=section.get("H", float, None),
        eta=section.get("eta", float, None),
        schedule=section.get("schedule", str, "constant"),
        confidence=section.get("confidence", float, 0.05),
        record_every=section.get("record_every", int, None),
        batch=section.get("batch", int, 1),
    )
    if run.radius < min_radius(size) - 1e-12:
        raise section.error(f"S={run.radius!r} is below 1/sqrt(m) for m={size}; the dual set is empty", "S")
    settings = DualSettings(
        run=run,
        u_aware=section.get("u_aware", bool, False),
        pilot_rounds=section.get("pilot_T", int, None),
        evaluate=section.get("evaluate", bool, True),
    )
    section.finish()
    return settings


def parse_experiment(
    root: ConfigSection,
    seed: int | None = None,
    output_dir: FilePath | None = None,
) -> ExperimentConfig:
    """Builds an :class:`ExperimentConfig` from a root config section.

    Args:
        root (ConfigSection): The decoded config.
        seed (int | None): Overrides the config's ``seed``.
        output_dir (FilePath | None): Overrides the config's ``output_dir``.

    Returns:
        ExperimentConfig: The validated experiment.

    Raises:
        ConfigError: For missing, unknown or invalid keys.
    """
    path = root.source.path
    base_dir = Path(path).parent if path else Path()
    if seed is None:
        run_seed = root.get("seed", int)
    else:
        root.get("seed", int, seed)
        run_seed = seed

    method = root.get("method", str)
    if method not in METHODS:
        raise root.error(f"Unknown method {method!r}; expected one of {METHODS}", "method")

    kind, environment = _parse_environment(root.section("environment", required=True), run_seed, base_dir)
    criterion = root.get("criterion", str, "average" if kind in QUEUE_KINDS else "discounted")
    if criterion not in CRITERIA:
        raise root.error(f"Unknown criterion {criterion!r}; expected one of {CRITERIA}", "criterion")
    simulated = isinstance(environment, QueueNetworkConfig) and not environment.bounded
    if simulated and criterion != "average":
        raise root.error("Simulated environments only support the average criterion", "criterion")

    basis, size = _parse_basis(root.section("basis"), kind, environment)
    if method == "hardness" and kind != "graph":
        raise root.error("The hardness method needs a graph environment", "method")
    if method == "dual-grid" and size > 3:
        raise root.error(f"dual-grid supports at most 3 base policies, got {size}", "method")

    grid = root.section("grid")
    grid_resolution = grid.get("resolution", float, 0.01)
    grid.finish()
    hardness = root.section("hardness")
    hardness_resolution = hardness.get("resolution", float, 0.02)
    hardness.finish()
    sim = root.section("simulation")
    simulation = SimulationSettings(
        horizon=sim.get("horizon", int, 100_000),
        occupancy_horizon=sim.get("occupancy_horizon", int, 200_000),
        batches=sim.get("batches", int, 20),
    )
    if min(simulation.horizon, simulation.occupancy_horizon) < 1 or simulation.batches < 1:
        raise sim.error("Simulation horizons and batches must be positive")
    sim.finish()
    compare = root.section("compare")
    compare_steps = compare.get("steps", int, 20)
    if compare_steps < 1:
        raise compare.error(f"steps must be at least 1, got {compare_steps}", "steps")
    compare.finish()

    config = ExperimentConfig(
        seed=run_seed,
        method=method,
        criterion=criterion,
        kind=kind,
        environment=environment,
        basis=basis,
        basis_size=size,
        primal=_parse_primal(root.section("primal")),
        dual=_parse_dual(root.section("sgd"), run_seed, size),
        grid_resolution=grid_resolution,
        hardness_resolution=hardness_resolution,
        simulation=simulation,
        compare_steps=compare_steps,
        workers=root.get("workers", int, 1),
        output_dir=Path(output_dir) if output_dir is not None else root.get("output_dir", Path, Path("results")),
        path=path,
    )
    root.finish()
    return config


def load_experiment(path: FilePath, seed: int | None = None, output_dir: FilePath | None = None) -> ExperimentConfig:
    """Reads and parses an experiment config file."""
    return parse_experiment(load_config(path), seed, output_dir)


@dataclass
class Problem:
    """An environment with its base policies, tabular or simulated."""

    mdp: Optional[TabularMdp] = None
    basis: Optional[PolicyBasis] = None
    simulator: Optional[QueueNetworkSimulator] = None
    rules: list[FamilyRule] = field(default_factory=list)
    graph: Optional[Graph] = None

    @property
    def tabular(self) -> bool:
        """Whether the problem is solved exactly."""
        return self.mdp is not None

    @property
    def size(self) -> int:
        """Number of base policies."""
        return self.basis.size if self.basis is not None else len(self.rules)


def build_problem(config: ExperimentConfig) -> Problem:
    """Constructs the environment and the base policies of ``config``."""
    env = config.environment
    if isinstance(env, SingleQueueConfig):
        try:
            basis = single_queue_basis(env, config.basis)
        except InvalidInputError as exc:
            raise config.error(f"Invalid basis: {exc}") from exc
        return Problem(mdp=single_queue_mdp(env), basis=basis)
    if isinstance(env, QueueNetworkConfig):
        try:
            rules = [FamilyRule(env, probs) for probs in config.basis]
        except InvalidInputError as exc:
            raise config.error(f"Invalid basis: {exc}") from exc
        if config.simulated:
            return Problem(simulator=QueueNetworkSimulator(env), rules=rules)
        return Problem(mdp=network_mdp(env), basis=PolicyBasis(tabulate_rule(env, rule) for rule in rules))
    if isinstance(env, RandomMdpSpec):
        mdp = random_mdp(env.states, env.actions, env.discount, child_rng(env.seed, "random-mdp"), env.branching)
        rng = child_rng(config.seed, "basis")
        basis = PolicyBasis(random_policy(env.states, env.actions, rng) for _ in range(config.basis_size))
        return Problem(mdp=mdp, basis=basis)
    mdp, basis = reduction_mdp(env.graph, env.discount)
    return Problem(mdp=mdp, basis=basis, graph=env.graph)


@dataclass
class RunResult:
    """Summary values and the artifacts written by a run."""

    summary: dict[str, Any]
    files: list[Path] = field(default_factory=list)

    def render(self) -> str:
        """Returns the summary as YAML."""
        return wrap_raw_data_for_export(self.summary, "yaml")


def _tabular_columns(config: ExperimentConfig, problem: Problem, out: Path) -> tuple[FloatArray, list[Path]]:
    assert problem.mdp is not None and problem.basis is not None
    target = out / CACHE_FILE
    env_hash = config.environment_hash()
    policy_hash = array_hash(problem.basis.stacked())
    columns = load_matching(target, env_hash, policy_hash, config.criterion)
    if columns is not None and columns.shape == (problem.mdp.num_states * problem.mdp.num_actions, problem.size):
        return columns, [target]
    measure = stationary_occupancy if config.criterion == "average" else exact_occupancy
    logger.info("Computing %d %s occupancy measures", problem.size, config.criterion)
    columns = np.column_stack([measure(problem.mdp, policy).state_action for policy in problem.basis.policies])
    write_occupancies(target, columns, problem.mdp.num_actions, env_hash, policy_hash, config.criterion)
    return columns, [target]


def _empirical(config: ExperimentConfig, problem: Problem, out: Path) -> tuple[EmpiricalOccupancies, list[Path]]:
    assert problem.simulator is not None
    occupancies = empirical_occupancies(
        problem.simulator, problem.rules, config.simulation.occupancy_horizon, config.seed
    )
    target = write_occupancies(out / CACHE_FILE, occupancies.columns, occupancies.num_actions)
    width = len(occupancies.keys[0]) if occupancies.keys else 0
    states = write_csv(
        out / STATES_FILE,
        ["index", *(f"q{i + 1}" for i in range(width))],
        ([idx, *key] for idx, key in enumerate(occupancies.keys)),
    )
    return occupancies, [target, states]


def _base_costs(config: ExperimentConfig, problem: Problem) -> list[float]:
    if problem.tabular:
        assert problem.mdp is not None and problem.basis is not None
        return [evaluate_policy(problem.mdp, policy, config.criterion) for policy in problem.basis.policies]
    assert problem.simulator is not None
    horizon, batches = config.simulation.horizon, config.simulation.batches
    return [average_cost(rule, problem.simulator, horizon, config.seed, batches)[0] for rule in problem.rules]


def _write_summary(out: Path, summary: dict[str, Any]) -> Path:
    target = out / SUMMARY_FILE
    target.write_text(wrap_raw_data_for_export(summary, "yaml"), encoding="utf-8")
    return target


def _summary_header(config: ExperimentConfig, method: str) -> dict[str, Any]:
    return {
        "method": method,
        "environment": config.kind,
        "criterion": config.criterion,
        "seed": config.seed,
        "num_policies": config.basis_size,
    }


def _occupancy_files(config: ExperimentConfig, problem: Problem, out: Path) -> list[Path]:
    if problem.tabular:
        return _tabular_columns(config, problem, out)[1]
    return _empirical(config, problem, out)[1]


def run_occupancy(config: ExperimentConfig) -> RunResult:
    """Computes the base occupancy measures and writes ``occupancies.txt`` only."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(config)
    files = _occupancy_files(config, problem, out)
    summary = _summary_header(config, "occupancy")
    summary["files"] = [path.name for path in files]
    return RunResult(summary, files)


def _run_primal(
    config: ExperimentConfig,
    problem: Problem,
    out: Path,
    iterations: int | None = None,
    trace_name: str = TRACE_FILE,
) -> tuple[dict[str, Any], list[Any], list[Path]]:
    settings = config.primal
    if problem.tabular:
        assert problem.mdp is not None and problem.basis is not None
        evaluator = make_primal_evaluator(problem.mdp, problem.basis, config.criterion)
        step = settings.step or EXACT_STEP
    else:
        assert problem.simulator is not None
        evaluator = make_simulation_evaluator(problem.simulator, problem.rules, config.simulation.horizon, config.seed)
        step = settings.step or SIMULATION_STEP

    start = settings.start or tuple(MixtureWeight.uniform(problem.size).w.tolist())
    if len(start) != problem.size:
        raise config.error(f"primal.start has {len(start)} entries for {problem.size} base policies")
    started = time.perf_counter()
    weight, trace = primal_descent(
        evaluator,
        start,
        iterations or settings.iterations,
        step_schedule(settings.schedule, settings.eta),
        step,
        config.workers,
    )
    elapsed = time.perf_counter() - started
    files = [
        write_csv(
            out / trace_name,
            ["iter", "objective", *(f"w_{i}" for i in range(problem.size))],
            ([record.iteration, record.objective, *record.weights] for record in trace),
        )
    ]
    if settings.sweep is not None and problem.tabular and problem.size == 2:
        assert problem.mdp is not None and problem.basis is not None
        values = np.linspace(*settings.sweep)
        sweep = primal_line_sweep(problem.mdp, problem.basis, values, config.criterion)
        files.append(write_csv(out / SWEEP_FILE, ["w", "objective"], sweep))
    summary = {
        "objective": float(evaluator(weight.w)),
        "weights": weight.w.tolist(),
        "wall_time": elapsed,
    }
    return summary, trace, files


def _dual_space(config: ExperimentConfig, problem: Problem, out: Path) -> tuple[DualSpace, FloatArray, Any, list[Path]]:
    radius = config.dual.run.radius
    if problem.tabular:
        assert problem.mdp is not None
        mdp = problem.mdp
        columns, files = _tabular_columns(config, problem, out)
        space = DualSpace(columns, radius, mdp.num_actions)

        def objective(point: DualPoint) -> float:
            return dual_objective(mdp, space, point, config.criterion)

        return space, mdp.state_action_cost, objective, files
    assert problem.simulator is not None
    occupancies, files = _empirical(config, problem, out)
    space = DualSpace(occupancies.columns, radius, occupancies.num_actions)
    objective = make_lookup_evaluator(problem.simulator, occupancies, space, config.simulation.horizon, config.seed)
    return space, occupancies.costs, objective, files


def _run_sgd(
    config: ExperimentConfig,
    problem: Problem,
    out: Path,
    record_every: int | None = None,
    trace_name: str = TRACE_FILE,
) -> tuple[dict[str, Any], SgdResult, list[Path]]:
    space, cost, objective, files = _dual_space(config, problem, out)
    settings = config.dual
    run = settings.run if record_every is None else dataclasses.replace(settings.run, record_every=record_every)
    gamma = problem.mdp.discount if problem.mdp is not None else SIMULATION_DISCOUNT
    if settings.u_aware:
        pilot_rounds = settings.pilot_rounds or max(1, run.num_rounds // 10)
        pilot = sgd_optimize(space, cost, dataclasses.replace(run, num_rounds=pilot_rounds, record_every=None))
        pilot_violation = constraint_violation(xi(space, pilot.theta_hat))
        run = tune_u_aware(run, pilot_violation, gamma)
        logger.info("Pilot run measured U=%.6g; using eta=%.6g", pilot_violation, run.eta)

    result = sgd_optimize(space, cost, run, evaluator=objective if settings.evaluate else None)
    with_truth = settings.evaluate
    header = ["t", "L_est", "U", *(f"theta_{i}" for i in range(space.size))]
    if with_truth:
        header.append("J_true")
    rows = (
        [r.t, r.surrogate_estimate, r.violation, *r.theta, *([r.true_objective] if with_truth else [])]
        for r in result.trace
    )
    files.append(write_csv(out / trace_name, header, rows))
    theta_hat = result.theta_hat
    summary = {
        "objective": float(objective(theta_hat)),
        "theta": theta_hat.theta.tolist(),
        "violation": constraint_violation(xi(space, theta_hat)),
        "surrogate": surrogate_loss(space, theta_hat, cost, result.penalty),
        "eta": result.eta,
        "penalty": result.penalty,
        "gradient_bound": result.gradient_bound,
        "max_gradient_norm": result.max_gradient_norm,
        "num_rounds": run.num_rounds,
        "radius": run.radius,
        "wall_time": result.wall_time,
    }
    return summary, result, files


def _run_grid(config: ExperimentConfig, problem: Problem, out: Path) -> tuple[dict[str, Any], list[Path]]:
    space, _, objective, files = _dual_space(config, problem, out)
    started = time.perf_counter()
    best, value, evaluated = dual_grid_search(space, objective, config.grid_resolution)
    rows = (
        [idx, constraint_violation(space.columns @ np.asarray(theta)), *theta, objective_value]
        for idx, (theta, objective_value) in enumerate(evaluated)
    )
    header = ["point", "U", *(f"theta_{i}" for i in range(space.size)), "J_true"]
    files.append(write_csv(out / TRACE_FILE, header, rows))
    summary = {
        "objective": value,
        "theta": best.theta.tolist(),
        "violation": constraint_violation(xi(space, best)),
        "grid_points": len(evaluated),
        "wall_time": time.perf_counter() - started,
    }
    return summary, files


def _run_hardness(config: ExperimentConfig, problem: Problem, out: Path) -> tuple[dict[str, Any], list[Path]]:
    assert problem.graph is not None and problem.mdp is not None
    graph, gamma = problem.graph, problem.mdp.discount
    _, files = _tabular_columns(config, problem, out)
    started = time.perf_counter()
    alpha = independence_number(graph)
    lattice_min = motzkin_straus_min(graph, config.hardness_resolution)
    rows, largest = [], 0
    for target in range(1, graph.num_vertices + 1):
        decided, witness = stable_set_decision(graph, target, gamma, config.hardness_resolution)
        if decided:
            largest = target
        weights = witness.w.tolist() if witness is not None else [None] * graph.num_vertices
        rows.append([target, (1.0 - gamma) * gamma**2 / target, decided, *weights])
    header = ["j", "target", "decision", *(f"w_{i}" for i in range(graph.num_vertices))]
    files.append(write_csv(out / TRACE_FILE, header, rows))
    summary = {
        "independence_number": alpha,
        "motzkin_straus_min": lattice_min,
        "inverse_independence_number": 1.0 / alpha,
        "largest_decided_target": largest,
        "wall_time": time.perf_counter() - started,
    }
    return summary, files


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Runs the configured method and writes its artifacts.

    Returns:
        RunResult: The summary (also written to ``summary.txt``) and the files.

    Raises:
        ConfigError: For settings that only fail once the problem is built.
        NumericalError: If a solve fails.
        AmbiguousChainError: If an average-cost chain is not unichain.
        FiniteDifferenceError: If a perturbed evaluation fails.
    """
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    logger.info("Running %s on %s (seed %d)", config.method, config.kind, config.seed)
    problem = build_problem(config)
    summary = _summary_header(config, config.method)

    if config.method == "primal-fd":
        files = _occupancy_files(config, problem, out)
        values, _, primal_files = _run_primal(config, problem, out)
        files.extend(primal_files)
    elif config.method == "dual-sgd":
        values, _, files = _run_sgd(config, problem, out)
    elif config.method == "dual-grid":
        values, files = _run_grid(config, problem, out)
    else:
        values, files = _run_hardness(config, problem, out)

    if config.method != "hardness":
        summary["base_costs"] = _base_costs(config, problem)
    summary.update(values)
    files.append(_write_summary(out, summary))
    return RunResult(summary, files)


def compare_methods(config: ExperimentConfig) -> RunResult:
    """Runs ``primal-fd`` and ``dual-sgd`` side by side and writes ``compare.csv``.

    Each method contributes ``compare_steps`` rows ``(step, method, objective)``:
    primal iterations ``1..steps`` and the true objective at every dual trace
    row. One ``ref`` row per base policy carries its cost.

    Raises:
        ConfigError: If ``sgd.T`` is not a multiple of ``compare.steps``.
    """
    steps = config.compare_steps
    run = config.dual.run
    if run.num_rounds % steps:
        raise config.error(f"sgd.T={run.num_rounds} must be a multiple of compare.steps={steps}")
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(config)
    dual_config = dataclasses.replace(config, dual=dataclasses.replace(config.dual, evaluate=True))

    primal_summary, primal_trace, files = _run_primal(config, problem, out, steps, "trace-primal-fd.csv")
    dual_summary, dual_result, dual_files = _run_sgd(
        dual_config, problem, out, run.num_rounds // steps, "trace-dual-sgd.csv"
    )
    files.extend(dual_files)
    base_costs = _base_costs(config, problem)

    rows: list[list[Any]] = [[record.iteration, "primal-fd", record.objective] for record in primal_trace[1:]]
    rows.extend([idx + 1, "dual-sgd", record.true_objective] for idx, record in enumerate(dual_result.trace))
    rows.extend(["ref", f"base-{idx}", cost] for idx, cost in enumerate(base_costs))
    files.append(write_csv(out / COMPARE_FILE, ["step", "method", "objective"], rows))

    summary = _summary_header(config, "compare")
    summary["base_costs"] = base_costs
    summary["primal-fd"] = primal_summary
    summary["dual-sgd"] = dual_summary
    files.append(_write_summary(out, summary))
    return RunResult(summary, files)
