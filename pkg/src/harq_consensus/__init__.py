"""Quantized average consensus over unreliable directed links.

Nodes exchange integer mass tokens over packet-dropping directed links
with one-bit error-free acknowledgements, retransmitting refused packets
under a bounded retry budget whose per-attempt error probability decays
as ``p * lam ** r``.  Every node's output is an exact rational that
reaches the exact average of the integer inputs in finitely many rounds.
"""
from .channel import (
    ChannelError,
    DeliveryOutcome,
    HarqChannel,
    IdealChannel,
    LinkParams,
    ScheduleEntryMissing,
    ScriptedChannel,
    bernoulli_channel,
    error_probability,
    load_schedule_csv,
    save_schedule_csv,
)
from .config import (
    ChannelSpec,
    ConfigError,
    GraphSpec,
    ScenarioConfig,
    SweepConfig,
    ValuesSpec,
    format_scenario_config,
    format_sweep_config,
    parse_scenario_config,
    parse_sweep_config,
)
from .digraph import (
    Digraph,
    GraphError,
    NotStronglyConnected,
    build,
    dump_graph,
    load_graph,
    random_strongly_connected,
)
from .engine import (
    HaltConfig,
    RunTrace,
    SimulationError,
    World,
    init_world,
    iterations_to_convergence,
    run,
)
from .protocol import (
    InFlightEntry,
    MassPair,
    NodeState,
    Packet,
    ProtocolError,
    evaluate_trigger,
    init_node,
)
from .replay import (
    EXAMPLE1_EDGES,
    EXAMPLE1_MAX_RETX,
    EXAMPLE1_PORTS,
    EXAMPLE1_VALUES,
    DerivedSchedule,
    derive_example1_schedule,
    example1_digraph,
    replay_trace,
    replay_world,
)
from .scenarios import (
    PRESETS,
    LambdaComparison,
    ScenarioResult,
    build_world,
    compare_lambda,
    run_scenario,
)
from .sweep import CellStats, SweepResult, run_cell, run_sweep, sweep_graph

__version__ = "0.1.0"
