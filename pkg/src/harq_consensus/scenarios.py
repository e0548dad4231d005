"""Scenario presets and the single-run pipeline.

The bundled presets mirror the three channel conditions of the four-node
example: ``sc1`` ideal links, ``sc2`` lossy links with plain ARQ
(``lam = 1``), ``sc3`` lossy links with combining retransmissions
(``lam = 0.3``); ``example1`` replays the derived scripted schedule.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass
from pathlib import Path
from random import Random

from .channel import (
    HarqChannel,
    IdealChannel,
    LinkParams,
    ScriptedChannel,
    bernoulli_channel,
    load_schedule_csv,
)
from .config import ChannelSpec, ConfigError, GraphSpec, ScenarioConfig, ValuesSpec
from .digraph import Digraph, build, load_graph, random_strongly_connected
from .engine import HaltConfig, RunTrace, World, init_world, iterations_to_convergence, run
from .replay import (
    EXAMPLE1_EDGES,
    EXAMPLE1_MAX_RETX,
    EXAMPLE1_N,
    EXAMPLE1_PORTS,
    EXAMPLE1_VALUES,
    derive_example1_schedule,
    example1_digraph,
)

_EXAMPLE1_GRAPH = GraphSpec("example1")
_EXAMPLE1_Y0 = ValuesSpec("explicit", values=EXAMPLE1_VALUES)

PRESETS: dict[str, ScenarioConfig] = {
    "sc1": ScenarioConfig(_EXAMPLE1_GRAPH, _EXAMPLE1_Y0, ChannelSpec("ideal"), seed=1),
    "sc2": ScenarioConfig(
        _EXAMPLE1_GRAPH, _EXAMPLE1_Y0,
        ChannelSpec("harq", p=0.6, lam=1.0, max_retx=2), seed=1,
    ),
    "sc3": ScenarioConfig(
        _EXAMPLE1_GRAPH, _EXAMPLE1_Y0,
        ChannelSpec("harq", p=0.6, lam=0.3, max_retx=2), seed=1,
    ),
    "example1": ScenarioConfig(
        _EXAMPLE1_GRAPH, _EXAMPLE1_Y0, ChannelSpec("scripted"), seed=1, max_rounds=8,
    ),
}


def build_graph(spec: GraphSpec, rng: Random,
                ports: tuple[tuple[int, tuple[int, ...]], ...] = ()) -> Digraph:
    if spec.kind == "example1":
        if ports:
            overrides = dict(EXAMPLE1_PORTS)
            overrides.update({node: dsts for node, dsts in ports})
            return build(EXAMPLE1_N, EXAMPLE1_EDGES, port_order=overrides)
        return example1_digraph()
    if spec.kind == "file":
        graph = load_graph(spec.path)
    elif spec.kind == "random":
        graph = random_strongly_connected(spec.n, spec.extra_edge_prob, rng)
    else:
        raise ConfigError(f"graph: unknown source {spec.kind!r}")
    if ports:
        return build(graph.n, sorted(graph.edges),
                     port_order={node: dsts for node, dsts in ports})
    return graph


def draw_values(spec: ValuesSpec, n: int, rng: Random) -> list[int]:
    if spec.kind == "explicit":
        if len(spec.values) != n:
            raise ConfigError(
                f"values: got {len(spec.values)} values for {n} nodes"
            )
        return list(spec.values)
    return [rng.randint(spec.low, spec.high) for _ in range(n)]


def build_channel(spec: ChannelSpec):
    if spec.kind == "ideal":
        return IdealChannel()
    if spec.kind == "bernoulli":
        return bernoulli_channel(spec.p, spec.max_retx)
    if spec.kind == "harq":
        return HarqChannel(LinkParams(spec.p, spec.lam, spec.max_retx))
    if spec.kind == "scripted":
        if spec.path is None:
            # Bundled replay: derive the schedule rather than read a file.
            return derive_example1_schedule().channel()
        return ScriptedChannel(load_schedule_csv(spec.path),
                               max_retx=EXAMPLE1_MAX_RETX)
    raise ConfigError(f"channel: unknown kind {spec.kind!r}")


def build_world(cfg: ScenarioConfig, rng: Random) -> World:
    """Materialize a config: graph, then initial values, then channel."""
    graph = build_graph(cfg.graph, rng, cfg.ports)
    values = draw_values(cfg.values, graph.n, rng)
    channel = build_channel(cfg.channel)
    return init_world(graph, values, channel)


@dataclass
class ScenarioResult:
    trace: RunTrace
    world: World
    out_dir: Path | None
    csv_paths: dict[str, Path]
    figure_paths: dict[str, Path]

    @property
    def converged(self) -> bool:
        return self.trace.outcome == "converged"


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> ScenarioResult:
    """Run one configured scenario and export its trace.

    Writes ``states.csv``, ``events.csv`` and ``metrics.csv`` plus the
    error-curve and per-node-output figures into the output directory
    (config ``out`` or the ``out_dir`` argument; no export when neither
    is given).
    """
    cfg.validate()
    rng = Random(cfg.seed)
    world = build_world(cfg, rng)
    halt = HaltConfig(max_rounds=cfg.max_rounds, stability_window=cfg.stability_window)
    trace = run(world, halt, rng)

    target = Path(out_dir) if out_dir is not None else (
        Path(cfg.out_dir) if cfg.out_dir else None
    )
    csv_paths: dict[str, Path] = {}
    figure_paths: dict[str, Path] = {}
    if target is not None:
        from . import report

        target.mkdir(parents=True, exist_ok=True)
        csv_paths = report.write_trace_csvs(trace, target)
        figure_paths = report.write_trace_figures(trace, target)
    return ScenarioResult(trace, world, target, csv_paths, figure_paths)


@dataclass
class LambdaComparison:
    """Paired iteration counts for two retransmission-decay settings."""

    lam_a: float
    lam_b: float
    pairs: list[tuple[int | None, int | None]]
    median_a: float
    median_b: float
    median_paired_diff: float


def compare_lambda(cfg: ScenarioConfig, lam_a: float, lam_b: float,
                   replicas: int) -> LambdaComparison:
    """Run the same seeds under two ``lam`` values and pair the results.

    The config supplies everything except ``lam``; replica ``i`` of both
    arms uses seed ``cfg.seed + 7919 * i``, so the comparison is paired.
    """
    cfg.validate()
    if cfg.channel.kind not in ("harq", "bernoulli", "ideal"):
        raise ConfigError("compare-lambda needs a stochastic channel config")
    pairs: list[tuple[int | None, int | None]] = []
    for i in range(replicas):
        seed = cfg.seed + 7919 * i
        counts = []
        for lam in (lam_a, lam_b):
            rng = Random(seed)
            graph = build_graph(cfg.graph, rng, cfg.ports)
            values = draw_values(cfg.values, graph.n, rng)
            if cfg.channel.kind == "ideal":
                channel = IdealChannel()
            else:
                channel = HarqChannel(
                    LinkParams(cfg.channel.p, lam, cfg.channel.max_retx)
                )
            world = init_world(graph, values, channel)
            counts.append(iterations_to_convergence(world, rng, cfg.max_rounds))
        pairs.append((counts[0], counts[1]))

    a_vals = [a for a, _ in pairs if a is not None]
    b_vals = [b for _, b in pairs if b is not None]
    diffs = [a - b for a, b in pairs if a is not None and b is not None]
    return LambdaComparison(
        lam_a=lam_a,
        lam_b=lam_b,
        pairs=pairs,
        median_a=statistics.median(a_vals) if a_vals else float("nan"),
        median_b=statistics.median(b_vals) if b_vals else float("nan"),
        median_paired_diff=statistics.median(diffs) if diffs else float("nan"),
    )
