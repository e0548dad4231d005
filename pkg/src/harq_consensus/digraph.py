"""Static directed communication topologies.

A :class:`Digraph` stores a fixed set of directed edges ``src -> dst``
(``src`` can transmit to ``dst``) over nodes ``1..n``, plus a per-node
transmit *port order*: a bijection from each node's out-neighbor set onto
``{1, ..., out_degree}``.  The port order drives round-robin transmission
and defaults to ascending destination index, so runs are reproducible
unless a caller supplies explicit permutations.

Self-loops are rejected: a node keeping its own value is local state
retention, never a transmission.
"""
from __future__ import annotations

from collections import deque
from pathlib import Path
from random import Random
from typing import Iterable, Mapping, Sequence


class GraphError(ValueError):
    """Base class for topology validation failures."""


class NodeCountError(GraphError):
    """Fewer than two nodes."""


class EndpointError(GraphError):
    """Edge endpoint outside ``1..n``."""


class SelfLoopError(GraphError):
    """Edge from a node to itself."""


class DuplicateEdgeError(GraphError):
    """Same ordered pair listed twice."""


class PortOrderError(GraphError):
    """Port override is not a bijection onto a node's out-neighbor set."""


class NotStronglyConnected(GraphError):
    """Operation requires every node to reach every other node."""


class Digraph:
    """Immutable directed graph with ordered out-ports.

    Construct via :func:`build`, :func:`random_strongly_connected` or
    :func:`load_graph`; instances are safe to share read-only.
    """

    __slots__ = ("n", "edges", "_out_ports", "_in")

    def __init__(self, n: int, edges: frozenset, out_ports: dict, incoming: dict):
        self.n = n
        self.edges = edges
        self._out_ports = out_ports  # node -> tuple of out-neighbors in port order
        self._in = incoming          # node -> tuple of in-neighbors, ascending

    def out_neighbors(self, j: int) -> list[int]:
        """Out-neighbors of ``j`` in port order (index 0 is port 1)."""
        return list(self._out_ports[j])

    def in_neighbors(self, j: int) -> list[int]:
        """Nodes that can transmit to ``j``, ascending."""
        return list(self._in[j])

    def out_degree(self, j: int) -> int:
        return len(self._out_ports[j])

    def ports(self, j: int) -> dict[int, int]:
        """Map out-neighbor -> port number for node ``j``."""
        return {dst: i + 1 for i, dst in enumerate(self._out_ports[j])}

    def has_edge(self, src: int, dst: int) -> bool:
        return (src, dst) in self.edges

    def is_strongly_connected(self) -> bool:
        """True iff every node reaches every other node."""
        return (
            len(self._reachable(1, forward=True)) == self.n
            and len(self._reachable(1, forward=False)) == self.n
        )

    def diameter(self) -> int:
        """Longest shortest directed path between any ordered node pair."""
        best = 0
        for src in range(1, self.n + 1):
            dist = self._bfs_distances(src)
            if len(dist) != self.n:
                raise NotStronglyConnected(
                    f"diameter undefined: node {src} does not reach every node"
                )
            best = max(best, max(dist.values()))
        return best

    # -- internals ----------------------------------------------------------

    def _neighbors_fn(self, forward: bool):
        if forward:
            return lambda v: self._out_ports[v]
        return lambda v: self._in[v]

    def _reachable(self, start: int, forward: bool) -> set[int]:
        nbrs = self._neighbors_fn(forward)
        seen = {start}
        frontier = deque([start])
        while frontier:
            v = frontier.popleft()
            for w in nbrs(v):
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        return seen

    def _bfs_distances(self, src: int) -> dict[int, int]:
        dist = {src: 0}
        frontier = deque([src])
        while frontier:
            v = frontier.popleft()
            d = dist[v]
            for w in self._out_ports[v]:
                if w not in dist:
                    dist[w] = d + 1
                    frontier.append(w)
        return dist

    def __eq__(self, other) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edges == other.edges
            and self._out_ports == other._out_ports
        )

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, m={len(self.edges)})"


def build(
    n: int,
    edges: Iterable[tuple[int, int]],
    port_order: Mapping[int, Sequence[int]] | None = None,
) -> Digraph:
    """Validate and assemble a digraph.

    ``port_order`` optionally overrides the transmit order for selected
    nodes: ``{node: [first_dst, second_dst, ...]}`` listing that node's
    out-neighbors in port order.  Unlisted nodes keep the default
    ascending order.
    """
    if n < 2:
        raise NodeCountError(f"need at least 2 nodes, got {n}")
    edge_list = list(edges)
    seen: set[tuple[int, int]] = set()
    for src, dst in edge_list:
        if not (1 <= src <= n) or not (1 <= dst <= n):
            raise EndpointError(f"edge ({src}, {dst}) outside 1..{n}")
        if src == dst:
            raise SelfLoopError(f"self-loop at node {src}")
        if (src, dst) in seen:
            raise DuplicateEdgeError(f"duplicate edge ({src}, {dst})")
        seen.add((src, dst))

    out: dict[int, list[int]] = {j: [] for j in range(1, n + 1)}
    incoming: dict[int, list[int]] = {j: [] for j in range(1, n + 1)}
    for src, dst in sorted(seen):
        out[src].append(dst)
        incoming[dst].append(src)

    out_ports: dict[int, tuple[int, ...]] = {}
    for j in range(1, n + 1):
        default = tuple(sorted(out[j]))
        if port_order and j in port_order:
            override = tuple(port_order[j])
            if sorted(override) != sorted(default):
                raise PortOrderError(
                    f"port order for node {j} is not a permutation of its "
                    f"out-neighbors {sorted(default)}: {list(override)}"
                )
            out_ports[j] = override
        else:
            out_ports[j] = default
    if port_order:
        unknown = set(port_order) - set(range(1, n + 1))
        if unknown:
            raise PortOrderError(f"port order given for unknown nodes {sorted(unknown)}")

    return Digraph(n, frozenset(seen), out_ports, {j: tuple(v) for j, v in incoming.items()})


def random_strongly_connected(n: int, extra_edge_prob: float, rng: Random) -> Digraph:
    """Random digraph guaranteed strongly connected.

    A directed Hamiltonian cycle over a random node permutation makes the
    result strongly connected without rejection sampling; every remaining
    ordered pair is then added independently with ``extra_edge_prob``.
    Deterministic given the state of ``rng``.
    """
    if n < 2:
        raise NodeCountError(f"need at least 2 nodes, got {n}")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise GraphError(f"extra_edge_prob must be in [0, 1], got {extra_edge_prob}")
    perm = list(range(1, n + 1))
    rng.shuffle(perm)
    edges = {(perm[i], perm[(i + 1) % n]) for i in range(n)}
    for src in range(1, n + 1):
        for dst in range(1, n + 1):
            if src == dst or (src, dst) in edges:
                continue
            if rng.random() < extra_edge_prob:
                edges.add((src, dst))
    return build(n, sorted(edges))


def load_graph(path: str | Path) -> Digraph:
    """Read a graph file.

    Format: first non-comment line is ``n``; each following line is a
    ``src dst`` pair (1-based); ``#`` starts a comment.  Optional lines
    ``port J: D1 D2 ...`` override node ``J``'s transmit order.
    """
    n: int | None = None
    edges: list[tuple[int, int]] = []
    port_order: dict[int, list[int]] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("port"):
            head, _, rest = line.partition(":")
            node = int(head[len("port"):])
            port_order[node] = [int(tok) for tok in rest.split()]
            continue
        fields = line.split()
        if n is None:
            if len(fields) != 1:
                raise GraphError(f"expected node count on first line, got {raw!r}")
            n = int(fields[0])
            continue
        if len(fields) != 2:
            raise GraphError(f"expected 'src dst', got {raw!r}")
        edges.append((int(fields[0]), int(fields[1])))
    if n is None:
        raise GraphError("empty graph file")
    return build(n, edges, port_order or None)


def dump_graph(g: Digraph, path: str | Path) -> None:
    """Write a graph file that :func:`load_graph` reads back equal."""
    lines = [str(g.n)]
    lines.extend(f"{src} {dst}" for src, dst in sorted(g.edges))
    for j in range(1, g.n + 1):
        order = g.out_neighbors(j)
        if order != sorted(order):
            lines.append(f"port {j}: " + " ".join(str(d) for d in order))
    Path(path).write_text("\n".join(lines) + "\n")
