"""Scripted four-node replay scenario and its schedule deriver.

The bundled example runs four nodes with inputs (2, 6, 2, 6) over the
directed edge set {2->1, 3->2, 1->3, 2->3, 4->3, 1->4}, a retry budget of
two retransmissions per packet, and node 2 transmitting to node 3 first.
The reference description of this scenario fixes a handful of waypoint
facts rather than a complete outcome schedule, so the schedule is derived
here by forward search: candidate per-round outcome assignments are
simulated breadth-wise and the first assignment consistent with all
waypoints wins.  The waypoints are mutually inconsistent as stated (see
``DerivedSchedule.report``); when the full set admits no schedule, the
deriver falls back to the largest satisfiable subset and says so.

Waypoints, by label:

* ``one_success``   - round 0 resolves with exactly one delivery, which
  carries (6, 1) into node 3 (whose state becomes (6, 1) at round 1);
* ``queue_holders`` - at round 1 exactly nodes {1, 3, 4} hold queued
  in-flight snapshots;
* ``v1_8_2``        - node 1's state is (8, 2) at round 2;
* ``final``         - every node's state is (16, 4) by round 8.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from random import Random

from .channel import ScriptedChannel
from .digraph import Digraph, build
from .engine import FRESH, HaltConfig, RunTrace, World, init_world, run
from .protocol import Packet

EXAMPLE1_N = 4
EXAMPLE1_EDGES = ((2, 1), (3, 2), (1, 3), (2, 3), (4, 3), (1, 4))
EXAMPLE1_VALUES = (2, 6, 2, 6)
EXAMPLE1_MAX_RETX = 2
# Node 2's transmit order is pinned to (3 first, then 1); the waypoints
# above are unreachable under the default ascending order.
EXAMPLE1_PORTS = {2: (3, 1)}
REPLAY_ROUNDS = 8

ANCHOR_LABELS = {
    "one_success": "round 0 has exactly one successful delivery, (6,1) into node 3",
    "queue_holders": "exactly nodes {1, 3, 4} hold queued snapshots at round 1",
    "v1_8_2": "node 1 adopts state (8,2) at round 2",
    "final": "all nodes reach state (16,4) by round 8",
}
_ANCHOR_ORDER = ("one_success", "queue_holders", "v1_8_2", "final")


def example1_digraph() -> Digraph:
    """The replay topology, including node 2's pinned transmit order."""
    return build(EXAMPLE1_N, EXAMPLE1_EDGES, port_order=EXAMPLE1_PORTS)


@dataclass(frozen=True)
class DerivedSchedule:
    """Outcome schedule plus the waypoint subset it satisfies."""

    entries: dict
    satisfied: tuple[str, ...]
    dropped: tuple[str, ...]
    report: str

    def channel(self) -> ScriptedChannel:
        return ScriptedChannel(self.entries, max_retx=EXAMPLE1_MAX_RETX)


def replay_world(entries: dict) -> World:
    """Fresh replay world wired to the given scripted outcomes."""
    channel = ScriptedChannel(entries, max_retx=EXAMPLE1_MAX_RETX)
    return init_world(example1_digraph(), EXAMPLE1_VALUES, channel)


def replay_trace(entries: dict, max_rounds: int = REPLAY_ROUNDS) -> RunTrace:
    world = replay_world(entries)
    return run(world, HaltConfig(max_rounds=max_rounds, stability_window=0), Random(0))


# -- search ---------------------------------------------------------------


class _LiveScript:
    """Scripted channel view over a mutable entry dict (search internal)."""

    __slots__ = ("entries",)

    def __init__(self, entries: dict):
        self.entries = entries

    def resolve(self, round_, src, dst, ordinal, r, rng):
        from .channel import DeliveryOutcome

        return DeliveryOutcome(self.entries[(round_, src, dst, ordinal)])

    def retx_limit(self, src, dst):
        return EXAMPLE1_MAX_RETX


def _outbox_keys(world: World) -> tuple[list, list[Packet]]:
    """Schedule keys for the pending outbox, in engine resolution order."""
    items = sorted(world.outbox, key=lambda it: (it[0].src, it[0].dst, it[1] != FRESH))
    ordinals: dict[tuple[int, int], int] = {}
    keys = []
    packets = []
    for packet, _kind in items:
        link = (packet.src, packet.dst)
        ordinal = ordinals.get(link, 0)
        ordinals[link] = ordinal + 1
        keys.append((world.round, packet.src, packet.dst, ordinal))
        packets.append(packet)
    return keys, packets


def _check_one_success(packets: list[Packet], combo: tuple[bool, ...],
                       child: World) -> bool:
    delivered = [p for p, ok in zip(packets, combo) if ok]
    if len(delivered) != 1:
        return False
    packet = delivered[0]
    if packet.dst != 3 or (packet.y, packet.z) != (6, 1):
        return False
    return child.nodes[3].state() == (6, 1)


def _check_queue_holders(child: World) -> bool:
    holders = {
        j for j in range(1, EXAMPLE1_N + 1)
        if any(child.nodes[j].queues.values())
    }
    return holders == {1, 3, 4}


def _check_v1_8_2(child: World) -> bool:
    return child.nodes[1].state() == (8, 2)


def _concentration(world: World) -> int:
    """Largest token count held anywhere: merge progress heuristic."""
    best = 0
    for node in world.nodes[1:]:
        if node.z > best:
            best = node.z
        for queue in node.queues.values():
            for entry in queue:
                if entry.z > best:
                    best = entry.z
    return best


def _at_target(world: World) -> int:
    n = world.graph.n
    target = world.y_target
    return sum(
        1 for node in world.nodes[1:] if node.ys == target and node.zs == n
    )


def _search(subset: frozenset[str], max_expansions: int = 400_000) -> dict | None:
    """Best-first search over per-round outcome assignments.

    Returns a schedule dict satisfying every waypoint in ``subset`` within
    eight rounds, or None when the (pruned) space is exhausted.  Expansion
    order prefers states with more converged nodes, then greater mass
    concentration, then depth; ties break by insertion, so the result is
    deterministic.
    """
    want_final = "final" in subset
    # Rounds after which every row-indexed waypoint has been checked.
    settled_row = 2 if "v1_8_2" in subset else (
        1 if subset & {"one_success", "queue_holders"} else 0
    )

    start = replay_world({})
    counter = 0
    heap: list[tuple[tuple, int, World, dict]] = [((0, 0, 0), 0, start, {})]
    seen: set[tuple[int, tuple]] = set()
    expansions = 0

    while heap:
        _, _, world, entries = heapq.heappop(heap)
        depth = world.round
        if depth >= REPLAY_ROUNDS:
            continue
        expansions += 1
        if expansions > max_expansions:
            raise RuntimeError(
                f"schedule search exceeded {max_expansions} expansions"
            )
        keys, packets = _outbox_keys(world)
        for combo in product((True, False), repeat=len(keys)):
            child_entries = dict(entries)
            child_entries.update(zip(keys, combo))
            child = world.clone()
            child.channel = _LiveScript(child_entries)
            child.step(Random(0))
            row = depth + 1

            if row == 1:
                if "one_success" in subset and not _check_one_success(
                    packets, combo, child
                ):
                    continue
                if "queue_holders" in subset and not _check_queue_holders(child):
                    continue
            if row == 2 and "v1_8_2" in subset and not _check_v1_8_2(child):
                continue

            if want_final:
                missing = EXAMPLE1_N - _at_target(child)
                if missing > REPLAY_ROUNDS - row:
                    continue  # at most one node can newly reach target per round
                if child.converged() and row >= settled_row:
                    return child_entries
            elif row >= settled_row:
                return _extend_all_ok(child, child_entries)

            fingerprint = (row, child.key())
            if fingerprint in seen:
                continue
            seen.add(fingerprint)
            counter += 1
            priority = (-_at_target(child), -_concentration(child), -row)
            heapq.heappush(heap, (priority, counter, child, child_entries))
    return None


def _extend_all_ok(world: World, entries: dict) -> dict:
    """Pad a partial schedule with successes out to the replay horizon."""
    world = world.clone()
    entries = dict(entries)
    world.channel = _LiveScript(entries)
    while world.round < REPLAY_ROUNDS:
        keys, _ = _outbox_keys(world)
        for key in keys:
            entries[key] = True
        world.step(Random(0))
    return entries


@lru_cache(maxsize=1)
def _derived() -> DerivedSchedule:
    names = _ANCHOR_ORDER
    for size in range(len(names), 0, -1):
        for subset in combinations(names, size):
            entries = _search(frozenset(subset))
            if entries is not None:
                satisfied = tuple(subset)
                dropped = tuple(n for n in names if n not in subset)
                report = _build_report(entries, satisfied, dropped)
                return DerivedSchedule(entries, satisfied, dropped, report)
    raise RuntimeError("no outcome schedule satisfies even one waypoint")


def derive_example1_schedule() -> DerivedSchedule:
    """Search for the replay schedule; cached after the first call."""
    return _derived()


def _build_report(entries: dict, satisfied: tuple[str, ...],
                  dropped: tuple[str, ...]) -> str:
    trace = replay_trace(entries)
    lines = ["replay schedule derivation"]
    lines.append(f"  outcomes scripted: {len(entries)}")
    for name in _ANCHOR_ORDER:
        mark = "satisfied" if name in satisfied else "DROPPED (no schedule satisfies it)"
        lines.append(f"  {name}: {mark} - {ANCHOR_LABELS[name]}")
    if dropped:
        lines.append(
            "  the waypoint set is inconsistent as stated; the schedule above "
            "satisfies the largest consistent subset"
        )
    lines.append(f"  converged at round: {trace.first_converged}")
    for label, node in (("node 1", 1), ("node 2", 2)):
        hit = next(
            (
                k for k, row in enumerate(trace.states)
                if (row[node - 1][2], row[node - 1][3]) == (8, 2)
            ),
            None,
        )
        if hit is not None:
            lines.append(f"  {label} first holds state (8,2) at round {hit}")
    return "\n".join(lines)
