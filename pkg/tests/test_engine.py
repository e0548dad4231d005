"""Round scheduler: phase order, conservation, convergence, determinism."""
from __future__ import annotations

import math
from fractions import Fraction
from random import Random

import pytest

from harq_consensus import (
    HaltConfig,
    IdealChannel,
    ScriptedChannel,
    SimulationError,
    bernoulli_channel,
    build,
    init_world,
    run,
)
from harq_consensus.digraph import NotStronglyConnected
from harq_consensus.replay import example1_digraph

from conftest import HAND_EXPECTED_QUEUES, HAND_EXPECTED_STATES, HAND_SCHEDULE


def _replay_world():
    channel = ScriptedChannel(HAND_SCHEDULE, max_retx=2)
    return init_world(example1_digraph(), [2, 6, 2, 6], channel)


def _two_cycle(y0, channel):
    return init_world(build(2, [(1, 2), (2, 1)]), y0, channel)


def error_oracle(world):
    """Exact rational recomputation of the consensus error."""
    n = world.graph.n
    average = Fraction(world.y_target, n)
    total = Fraction(0)
    for j in range(1, n + 1):
        diff = world.nodes[j].output() - average
        total += diff * diff
    return math.sqrt(float(total))


# -- initialization -----------------------------------------------------------------

def test_init_world_totals():
    world = _replay_world()
    assert world.total_mass() == (16, 4)
    assert world.round == 0
    assert len(world.outbox) == 4


def test_init_world_signed_values():
    world = _two_cycle([1, -1], IdealChannel())
    assert world.total_mass() == (0, 2)


def test_init_world_length_mismatch():
    with pytest.raises(ValueError):
        init_world(example1_digraph(), [2, 6, 2], IdealChannel())


def test_init_world_requires_strong_connectivity():
    g = build(3, [(1, 2), (2, 3)])
    with pytest.raises(NotStronglyConnected):
        init_world(g, [1, 2, 3], IdealChannel())


# -- scripted replay against the hand-walked table ------------------------------------

def test_replay_matches_hand_walked_rounds():
    world = _replay_world()
    rng = Random(0)
    for round_index in range(1, 9):
        world.step(rng)
        got = world.state_row()
        assert got == HAND_EXPECTED_STATES[round_index], f"round {round_index}"
        queues = {
            j: {
                dst: [(e.y, e.z, e.r) for e in queue]
                for dst, queue in world.nodes[j].queues.items()
                if queue
            }
            for j in range(1, 5)
            if any(world.nodes[j].queues.values())
        }
        assert queues == HAND_EXPECTED_QUEUES[round_index], f"round {round_index}"
        assert world.total_mass() == (16, 4), f"round {round_index}"
    assert world.converged()


def test_replay_first_step_events():
    world = _replay_world()
    events = []
    world.step(Random(0), events)
    assert events == [
        (0, 1, 3, 0, 0, "fresh", "drop"),
        (0, 2, 3, 0, 0, "fresh", "ok"),
        (0, 3, 2, 0, 0, "fresh", "drop"),
        (0, 4, 3, 0, 0, "fresh", "drop"),
    ]
    # Node 3 adopted the delivered (6, 1); refused snapshots sit on 1, 3, 4.
    assert world.nodes[3].state() == (6, 1)
    holders = {j for j in range(1, 5) if any(world.nodes[j].queues.values())}
    assert holders == {1, 3, 4}


def test_replay_fresh_before_retransmission_ordinals():
    world = _replay_world()
    events = []
    rng = Random(0)
    world.step(rng, events)
    events.clear()
    world.step(rng, events)
    # Round 1 carries node 3's fresh (6,1) at ordinal 0 and its refused
    # (2,1) retransmission at ordinal 1 on the same link.
    link_32 = [e for e in events if (e[1], e[2]) == (3, 2)]
    assert [(e[3], e[5]) for e in link_32] == [(0, "fresh"), (1, "retx")]


def test_missing_schedule_entry_aborts_with_round_context():
    channel = ScriptedChannel({}, max_retx=2)
    world = init_world(example1_digraph(), [2, 6, 2, 6], channel)
    with pytest.raises(SimulationError, match="round 0"):
        world.step(Random(0))


# -- degenerate dynamics ----------------------------------------------------------------

def test_two_cycle_zero_tokens_circulate_forever():
    world = _two_cycle([0, 0], IdealChannel())
    rng = Random(0)
    for _ in range(6):
        world.step(rng)
        assert world.state_row() == [(0, 0, 0, 1), (0, 0, 0, 1)]
        assert len(world.outbox) == 2
    assert not world.converged()  # states stay (0, 1), never (0, 2)


def test_empty_world_is_fixed_point():
    world = _two_cycle([0, 0], IdealChannel())
    for j in (1, 2):
        node = world.nodes[j]
        for queue in node.queues.values():
            queue.clear()
    world.outbox = []
    before = world.state_row()
    world.step(Random(0))
    assert world.state_row() == before
    assert world.outbox == []
    assert world.round == 1


# -- observation --------------------------------------------------------------------------

def test_consensus_error_initial_example():
    world = _replay_world()
    assert world.consensus_error() == pytest.approx(4.0)
    assert world.consensus_error() == pytest.approx(error_oracle(world))


def test_consensus_error_exactly_zero_at_convergence():
    world = _replay_world()
    rng = Random(0)
    for _ in range(8):
        world.step(rng)
    assert world.converged()
    assert world.consensus_error() == 0.0


def test_consensus_error_tracks_exact_oracle_along_replay():
    world = _replay_world()
    rng = Random(0)
    for _ in range(8):
        world.step(rng)
        assert world.consensus_error() == pytest.approx(error_oracle(world))


def test_converged_only_at_full_target():
    world = _replay_world()
    assert not world.converged()


# -- run loop ----------------------------------------------------------------------------

def test_run_ideal_example_converges_by_round_five():
    world = init_world(example1_digraph(), [2, 6, 2, 6], IdealChannel())
    trace = run(world, HaltConfig(max_rounds=50), Random(0))
    assert trace.outcome == "converged"
    assert trace.first_converged == 5
    assert trace.errors[5] == 0.0


def test_run_replay_trace_shape():
    trace = run(_replay_world(), HaltConfig(max_rounds=8), Random(0))
    assert trace.outcome == "converged"
    assert trace.first_converged == 8
    assert len(trace.states) == trace.rounds + 1
    assert trace.totals == [(16, 4)] * 9


def test_run_stability_window_extends_the_stop():
    world = init_world(example1_digraph(), [2, 6, 2, 6], IdealChannel())
    trace = run(world, HaltConfig(max_rounds=50, stability_window=3), Random(0))
    assert trace.first_converged == 5
    assert trace.rounds == 8  # three extra rounds verified after first hit
    assert all(err == 0.0 for err in trace.errors[5:])


def test_run_reports_round_cap():
    world = _two_cycle([0, 0], IdealChannel())
    trace = run(world, HaltConfig(max_rounds=5), Random(0))
    assert trace.outcome == "max_rounds"
    assert trace.first_converged is None


def test_halt_config_validation():
    with pytest.raises(ValueError):
        HaltConfig(max_rounds=0)
    with pytest.raises(ValueError):
        HaltConfig(max_rounds=5, stability_window=-1)


# -- determinism and channel equivalences ----------------------------------------------------

def _trace_tuple(trace):
    return (trace.states, trace.events, trace.errors, trace.totals, trace.outcome)


def test_identical_seeds_identical_traces():
    def one(seed):
        world = init_world(example1_digraph(), [2, 6, 2, 6], bernoulli_channel(0.6, 2))
        return run(world, HaltConfig(max_rounds=500), Random(seed))

    assert _trace_tuple(one(7)) == _trace_tuple(one(7))
    assert _trace_tuple(one(7)) != _trace_tuple(one(8))


def test_ideal_equals_zero_probability_bernoulli():
    ideal = run(
        init_world(example1_digraph(), [2, 6, 2, 6], IdealChannel()),
        HaltConfig(max_rounds=50), Random(3),
    )
    zero_p = run(
        init_world(example1_digraph(), [2, 6, 2, 6], bernoulli_channel(0.0, 2)),
        HaltConfig(max_rounds=50), Random(3),
    )
    assert _trace_tuple(ideal) == _trace_tuple(zero_p)
