"""Per-node state machine for event-triggered quantized mass passing.

Every node carries two integer pairs.  The *mass* pair ``(y, z)`` is
transferable: it accumulates deliveries and fold-backs, and is shipped
whole to one out-neighbor whenever the trigger fires.  The *state* pair
``(ys, zs)`` is the node's current estimate; its exact ratio ``ys / zs``
is the node's output and converges to the network average.

Outbound mass is snapshotted into a per-link FIFO queue at transmit time.
The snapshot content never changes afterwards; a retransmitted packet must
be bit-identical to the original so the receiver can combine decoding
attempts, and the frozen copies make global mass conservation an exact
integer identity.  Only the attempt counter of an entry advances.  When an
entry exhausts its retry budget, its snapshot folds back into the local
mass pair and re-enters the normal trigger path; there is no forced
immediate retransmit.

The trigger fires when the accumulated mass strictly outranks the state
(more tokens), or matches its token count with an at-least-as-large sum.
Firing adopts the mass as the new state, advances the round-robin port
cursor by one, and emits the whole mass as a fresh packet on that port.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence


class ProtocolError(ValueError):
    """Violation of the node-state contract (bad delivery, orphan feedback)."""


class MassPair(NamedTuple):
    y: int
    z: int


class Packet(NamedTuple):
    """An in-flight mass snapshot; ``r`` is the attempt index (0 = fresh)."""

    src: int
    dst: int
    y: int
    z: int
    r: int


class InFlightEntry:
    """Queued transmission awaiting acknowledgement.

    ``y`` and ``z`` are frozen at enqueue time; only ``r`` moves.
    """

    __slots__ = ("y", "z", "r")

    def __init__(self, y: int, z: int, r: int = 0):
        self.y = y
        self.z = z
        self.r = r

    def snapshot(self) -> MassPair:
        return MassPair(self.y, self.z)

    def __repr__(self):
        return f"InFlightEntry(y={self.y}, z={self.z}, r={self.r})"


def evaluate_trigger(z_new: int, y_new: int, z_s: int, y_s: int) -> bool:
    """True when accumulated mass should replace the state pair."""
    return z_new > z_s or (z_new == z_s and y_new >= y_s)


def _normalize_ports(ports: Mapping[int, int] | Sequence[int]) -> tuple[int, ...]:
    """Accept ``{neighbor: port}`` or a port-ordered sequence of neighbors."""
    if isinstance(ports, Mapping):
        degree = len(ports)
        if sorted(ports.values()) != list(range(1, degree + 1)):
            raise ProtocolError(
                f"port map is not a bijection onto 1..{degree}: {dict(ports)}"
            )
        ordered = [0] * degree
        for dst, port in ports.items():
            ordered[port - 1] = dst
        return tuple(ordered)
    ordered = tuple(ports)
    if len(set(ordered)) != len(ordered):
        raise ProtocolError(f"duplicate out-neighbor in port list: {list(ordered)}")
    return ordered


class NodeState:
    """Mutable per-node protocol state; single-owner, stepped by the engine."""

    __slots__ = ("node", "y", "z", "ys", "zs", "port_cursor", "ports", "queues")

    def __init__(self, node: int, y: int, z: int, ys: int, zs: int,
                 port_cursor: int, ports: tuple[int, ...]):
        self.node = node
        self.y = y
        self.z = z
        self.ys = ys
        self.zs = zs
        self.port_cursor = port_cursor
        self.ports = ports
        self.queues: dict[int, list[InFlightEntry]] = {dst: [] for dst in ports}

    # -- inbound ------------------------------------------------------------

    def absorb(self, delivered: Iterable[tuple[int, int]]) -> None:
        """Add received mass pairs; every pair must carry z >= 1."""
        ty = tz = 0
        for y, z in delivered:
            if z <= 0:
                raise ProtocolError(f"delivered pair ({y}, {z}) has non-positive z")
            ty += y
            tz += z
        self.y += ty
        self.z += tz

    # -- acknowledgements ----------------------------------------------------

    def on_feedback(self, out_neighbor: int, success: bool, max_retx: int,
                    attempt: int | None = None) -> None:
        """Apply one delivery outcome to the matching queued entry.

        ``attempt`` selects the entry whose counter equals the resolved
        packet's attempt index; two packets can share a link in one round
        (a retransmission of the head plus a fresh snapshot behind it) and
        their attempt indices are then distinct.  ``attempt=None`` targets
        the queue head.

        Success removes the entry: ownership of the mass transferred to
        the receiver.  Failure bumps the counter while budget remains,
        otherwise removes the entry and folds its snapshot into the local
        mass, where it waits for the next trigger evaluation.
        """
        queue = self.queues.get(out_neighbor)
        if queue is None:
            raise ProtocolError(f"node {self.node} has no link to {out_neighbor}")
        if not queue:
            raise ProtocolError(
                f"feedback for empty queue on link {self.node}->{out_neighbor}"
            )
        if attempt is None:
            index = 0
        else:
            index = next((i for i, e in enumerate(queue) if e.r == attempt), -1)
            if index < 0:
                raise ProtocolError(
                    f"no in-flight entry with attempt {attempt} on link "
                    f"{self.node}->{out_neighbor}"
                )
        entry = queue[index]
        if success:
            del queue[index]
        elif entry.r < max_retx:
            entry.r += 1
        else:
            del queue[index]
            self.y += entry.y
            self.z += entry.z

    # -- outbound ------------------------------------------------------------

    def trigger_step(self) -> Packet | None:
        """Evaluate the trigger once; adopt, enqueue and emit on fire.

        Called exactly once per round, after all feedback and deliveries
        of that round have been applied.
        """
        if not evaluate_trigger(self.z, self.y, self.zs, self.ys):
            return None
        self.ys = self.y
        self.zs = self.z
        self.port_cursor = self.port_cursor % len(self.ports) + 1
        dst = self.ports[self.port_cursor - 1]
        self.queues[dst].append(InFlightEntry(self.y, self.z, 0))
        packet = Packet(self.node, dst, self.y, self.z, 0)
        self.y = 0
        self.z = 0
        return packet

    def pending_retransmissions(self) -> list[Packet]:
        """Head-of-queue entries that were refused and still wait.

        At most one retransmission per out-link per round; entries behind
        the head wait their turn.  A head with ``r == 0`` was enqueued this
        round and already went out as a fresh packet.
        """
        out = []
        for dst in self.ports:
            queue = self.queues[dst]
            if queue and queue[0].r >= 1:
                head = queue[0]
                out.append(Packet(self.node, dst, head.y, head.z, head.r))
        return out

    # -- observation ---------------------------------------------------------

    def output(self) -> Fraction:
        """Exact rational estimate ``ys / zs``."""
        return Fraction(self.ys, self.zs)

    def mass(self) -> MassPair:
        return MassPair(self.y, self.z)

    def state(self) -> MassPair:
        return MassPair(self.ys, self.zs)

    def queued_mass(self) -> MassPair:
        """Total mass held in this node's in-flight queues."""
        ty = tz = 0
        for queue in self.queues.values():
            for entry in queue:
                ty += entry.y
                tz += entry.z
        return MassPair(ty, tz)

    def clone(self) -> "NodeState":
        dup = NodeState(self.node, self.y, self.z, self.ys, self.zs,
                        self.port_cursor, self.ports)
        for dst, queue in self.queues.items():
            dup.queues[dst] = [InFlightEntry(e.y, e.z, e.r) for e in queue]
        return dup

    def key(self) -> tuple:
        """Hashable full-state fingerprint (search and memoization aid)."""
        return (
            self.node, self.y, self.z, self.ys, self.zs, self.port_cursor,
            tuple(tuple((e.y, e.z, e.r) for e in self.queues[d]) for d in self.ports),
        )

    def __repr__(self):
        return (f"NodeState(node={self.node}, mass=({self.y},{self.z}), "
                f"state=({self.ys},{self.zs}))")


def init_node(node: int, y0: int,
              ports: Mapping[int, int] | Sequence[int]) -> tuple[NodeState, Packet]:
    """Initial state plus the mandatory round-0 transmission.

    The state pair starts at ``(y0, 1)``.  The full mass ``(y0, 1)`` is
    immediately snapshotted onto the port-1 out-neighbor's queue and the
    local mass zeroed, so conservation holds from round 0 onward.
    """
    port_list = _normalize_ports(ports)
    if not port_list:
        raise ProtocolError(
            f"node {node} has no out-neighbors; invalid in a strongly "
            "connected topology"
        )
    state = NodeState(node, 0, 0, y0, 1, 1, port_list)
    first = port_list[0]
    state.queues[first].append(InFlightEntry(y0, 1, 0))
    return state, Packet(node, first, y0, 1, 0)
