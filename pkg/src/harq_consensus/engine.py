"""Synchronous round scheduler.

One :meth:`World.step` executes a fixed phase order:

1. resolve every packet scheduled in the previous round (ordinals per
   link by position, fresh before retransmission);
2. route acknowledgements back to the senders;
3. deliver successful packets to their receivers;
4. run every node's trigger evaluation, collecting fresh packets;
5. collect head-of-queue retransmissions; fresh + retransmissions form
   the next round's outbox.

Nodes are visited in ascending index everywhere, so a run is a pure
function of (topology, initial values, channel model, seed).  Packets
scheduled in round ``k`` resolve at the start of round ``k + 1``: one
round of link latency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random

from .channel import ChannelError
from .digraph import Digraph, NotStronglyConnected
from .protocol import NodeState, Packet, ProtocolError, init_node

FRESH = "fresh"
RETX = "retx"

# Event tuple layout: (round, src, dst, ordinal, r, kind, outcome)
Event = tuple[int, int, int, int, int, str, str]


class SimulationError(RuntimeError):
    """A channel or protocol contract broke mid-run; carries the round."""

    def __init__(self, round_: int, message: str):
        super().__init__(f"round {round_}: {message}")
        self.round = round_


@dataclass(frozen=True)
class HaltConfig:
    """Stop policy: hard round cap plus a post-convergence stability window."""

    max_rounds: int
    stability_window: int = 0

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.stability_window < 0:
            raise ValueError(f"stability_window must be >= 0, got {self.stability_window}")


@dataclass
class RunTrace:
    """Per-round record of a run.

    Row 0 is the post-initialization snapshot; row k the state after the
    k-th step.  ``states[k][j-1]`` is node j's ``(y, z, ys, zs)``.
    """

    node_count: int
    y_target: int
    states: list[list[tuple[int, int, int, int]]] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    totals: list[tuple[int, int]] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    first_converged: int | None = None
    outcome: str = ""

    @property
    def rounds(self) -> int:
        return len(self.states) - 1


class World:
    """Complete simulation state: topology, nodes, channel, pending packets."""

    __slots__ = ("graph", "channel", "nodes", "round", "outbox", "y_target")

    def __init__(self, graph: Digraph, channel, nodes: list[NodeState | None],
                 outbox: list[tuple[Packet, str]], y_target: int):
        self.graph = graph
        self.channel = channel
        self.nodes = nodes        # index 0 unused; nodes[j] for j in 1..n
        self.round = 0
        self.outbox = outbox
        self.y_target = y_target

    # -- stepping -------------------------------------------------------------

    def step(self, rng: Random, events: list[Event] | None = None) -> None:
        """Advance one round through the five phases."""
        sent_round = self.round
        items = sorted(
            self.outbox,
            key=lambda it: (it[0].src, it[0].dst, it[1] != FRESH),
        )

        # Phase 1: resolve deliveries, assigning per-link ordinals.
        ordinals: dict[tuple[int, int], int] = {}
        resolved: list[tuple[Packet, bool]] = []
        for packet, kind in items:
            link = (packet.src, packet.dst)
            ordinal = ordinals.get(link, 0)
            ordinals[link] = ordinal + 1
            try:
                outcome = self.channel.resolve(
                    sent_round, packet.src, packet.dst, ordinal, packet.r, rng
                )
            except ChannelError as exc:
                raise SimulationError(sent_round, str(exc)) from exc
            resolved.append((packet, outcome.success))
            if events is not None:
                events.append((
                    sent_round, packet.src, packet.dst, ordinal, packet.r,
                    kind, "ok" if outcome.success else "drop",
                ))

        # Phase 2: acknowledgements back to senders.
        for packet, success in resolved:
            limit = self.channel.retx_limit(packet.src, packet.dst)
            try:
                self.nodes[packet.src].on_feedback(
                    packet.dst, success, limit, attempt=packet.r
                )
            except ProtocolError as exc:
                raise SimulationError(sent_round, str(exc)) from exc

        # Phase 3: deliveries to receivers (resolved is (src, dst)-sorted,
        # so each receiver's pairs arrive in ascending source order).
        deliveries: dict[int, list[tuple[int, int]]] = {}
        for packet, success in resolved:
            if success:
                deliveries.setdefault(packet.dst, []).append((packet.y, packet.z))
        for dst in sorted(deliveries):
            try:
                self.nodes[dst].absorb(deliveries[dst])
            except ProtocolError as exc:
                raise SimulationError(sent_round, str(exc)) from exc

        # Phases 4 + 5: triggers, then retransmissions, forming the next outbox.
        outbox: list[tuple[Packet, str]] = []
        for j in range(1, self.graph.n + 1):
            fresh = self.nodes[j].trigger_step()
            if fresh is not None:
                outbox.append((fresh, FRESH))
        for j in range(1, self.graph.n + 1):
            for packet in self.nodes[j].pending_retransmissions():
                outbox.append((packet, RETX))

        self.outbox = outbox
        self.round += 1

    # -- observation ----------------------------------------------------------

    def total_mass(self) -> tuple[int, int]:
        """Sum of local mass plus every queued in-flight snapshot.

        Outbox packets are copies of queued snapshots, so queues alone
        account for mass in transit.
        """
        ty = tz = 0
        for j in range(1, self.graph.n + 1):
            node = self.nodes[j]
            ty += node.y
            tz += node.z
            qy, qz = node.queued_mass()
            ty += qy
            tz += qz
        return ty, tz

    def converged(self) -> bool:
        """True iff every node's state pair equals (sum of inputs, n)."""
        n = self.graph.n
        target = self.y_target
        for j in range(1, n + 1):
            node = self.nodes[j]
            if node.ys != target or node.zs != n:
                return False
        return True

    def consensus_error(self) -> float:
        """Euclidean distance of the output vector from the exact average.

        Deviations are formed by integer cross-multiplication so the result
        is exactly 0.0 when every output equals the average; the norm itself
        is evaluated in floating point for reporting only.
        """
        n = self.graph.n
        target = self.y_target
        total = 0.0
        for j in range(1, n + 1):
            node = self.nodes[j]
            num = node.ys * n - target * node.zs
            if num:
                diff = num / (node.zs * n)
                total += diff * diff
        return math.sqrt(total)

    def state_row(self) -> list[tuple[int, int, int, int]]:
        return [
            (node.y, node.z, node.ys, node.zs)
            for node in self.nodes[1:]
        ]

    def clone(self) -> "World":
        nodes: list[NodeState | None] = [None]
        nodes.extend(node.clone() for node in self.nodes[1:])
        dup = World(self.graph, self.channel, nodes, list(self.outbox), self.y_target)
        dup.round = self.round
        return dup

    def key(self) -> tuple:
        """Hashable fingerprint of the mutable state (outbox is derivable)."""
        return tuple(node.key() for node in self.nodes[1:])


def init_world(graph: Digraph, y0: list[int] | tuple[int, ...], channel) -> World:
    """Initialize all nodes and schedule their round-0 transmissions."""
    if len(y0) != graph.n:
        raise ValueError(
            f"expected {graph.n} initial values, got {len(y0)}"
        )
    if not graph.is_strongly_connected():
        raise NotStronglyConnected("topology must be strongly connected")
    nodes: list[NodeState | None] = [None]
    outbox: list[tuple[Packet, str]] = []
    for j in range(1, graph.n + 1):
        state, packet = init_node(j, int(y0[j - 1]), graph.out_neighbors(j))
        nodes.append(state)
        outbox.append((packet, FRESH))
    return World(graph, channel, nodes, outbox, sum(int(v) for v in y0))


def run(world: World, halt: HaltConfig, rng: Random) -> RunTrace:
    """Step until converged-and-stable or the round cap; record everything.

    Non-convergence within ``max_rounds`` is a reported outcome, not an
    error, so sweep experiments can probe extreme loss rates safely.
    """
    trace = RunTrace(world.graph.n, world.y_target)
    trace.states.append(world.state_row())
    trace.errors.append(world.consensus_error())
    trace.totals.append(world.total_mass())

    streak = 0
    for _ in range(halt.max_rounds):
        world.step(rng, trace.events)
        trace.states.append(world.state_row())
        trace.errors.append(world.consensus_error())
        trace.totals.append(world.total_mass())
        if world.converged():
            if trace.first_converged is None:
                trace.first_converged = world.round
            streak += 1
            if streak > halt.stability_window:
                trace.outcome = "converged"
                return trace
        else:
            streak = 0
    trace.outcome = "max_rounds"
    return trace


def iterations_to_convergence(world: World, rng: Random, max_rounds: int) -> int | None:
    """First round at which the world converges, without trace overhead."""
    if world.converged():
        return 0
    for _ in range(max_rounds):
        world.step(rng)
        if world.converged():
            return world.round
    return None
