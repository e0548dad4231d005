"""Shared fixtures: the four-node example topology and a hand-derived
replay schedule with its expected round-by-round evolution.

The HAND_SCHEDULE table and HAND_EXPECTED rows were worked out by hand,
walking the protocol rules round by round; they are independent of both
the engine and the schedule searcher, and serve as the frozen oracle for
engine stepping.
"""
from __future__ import annotations

import pytest

from harq_consensus import build

EXAMPLE1_EDGES = ((2, 1), (3, 2), (1, 3), (2, 3), (4, 3), (1, 4))

# Outcome of every attempted delivery, keyed (round, src, dst, ordinal).
HAND_SCHEDULE = {
    (0, 1, 3, 0): False, (0, 2, 3, 0): True, (0, 3, 2, 0): False, (0, 4, 3, 0): False,
    (1, 1, 3, 0): False, (1, 3, 2, 0): False, (1, 3, 2, 1): True, (1, 4, 3, 0): False,
    (2, 1, 3, 0): True, (2, 3, 2, 0): False, (2, 4, 3, 0): False,
    (3, 3, 2, 0): False, (3, 4, 3, 0): True,
    (4, 3, 2, 0): True,
    (5, 2, 1, 0): True,
    (6, 1, 4, 0): True,
    (7, 4, 3, 0): True,
}

# Per round: ((y, z, ys, zs) for nodes 1..4) under HAND_SCHEDULE.
HAND_EXPECTED_STATES = [
    [(0, 0, 2, 1), (0, 0, 6, 1), (0, 0, 2, 1), (0, 0, 6, 1)],   # round 0
    [(0, 0, 2, 1), (0, 0, 6, 1), (0, 0, 6, 1), (0, 0, 6, 1)],   # round 1
    [(0, 0, 2, 1), (2, 1, 6, 1), (0, 0, 6, 1), (0, 0, 6, 1)],   # round 2
    [(0, 0, 2, 1), (2, 1, 6, 1), (2, 1, 6, 1), (0, 0, 6, 1)],   # round 3
    [(0, 0, 2, 1), (2, 1, 6, 1), (0, 0, 14, 3), (0, 0, 6, 1)],  # round 4
    [(0, 0, 2, 1), (0, 0, 16, 4), (0, 0, 14, 3), (0, 0, 6, 1)], # round 5
    [(0, 0, 16, 4), (0, 0, 16, 4), (0, 0, 14, 3), (0, 0, 6, 1)],# round 6
    [(0, 0, 16, 4), (0, 0, 16, 4), (0, 0, 14, 3), (0, 0, 16, 4)],# round 7
    [(0, 0, 16, 4), (0, 0, 16, 4), (0, 0, 16, 4), (0, 0, 16, 4)],# round 8
]

# Queue contents per round, {node: {dst: [(y, z, r), ...]}}; nodes with
# all-empty queues omitted.
HAND_EXPECTED_QUEUES = [
    {1: {3: [(2, 1, 0)]}, 2: {3: [(6, 1, 0)]}, 3: {2: [(2, 1, 0)]}, 4: {3: [(6, 1, 0)]}},
    {1: {3: [(2, 1, 1)]}, 3: {2: [(2, 1, 1), (6, 1, 0)]}, 4: {3: [(6, 1, 1)]}},
    {1: {3: [(2, 1, 2)]}, 3: {2: [(6, 1, 1)]}, 4: {3: [(6, 1, 2)]}},
    {3: {2: [(6, 1, 2)]}, 4: {3: [(6, 1, 0)]}},
    {3: {2: [(14, 3, 0)]}},
    {2: {1: [(16, 4, 0)]}},
    {1: {4: [(16, 4, 0)]}},
    {4: {3: [(16, 4, 0)]}},
    {3: {2: [(16, 4, 0)]}},
]


@pytest.fixture
def example1_graph_default_ports():
    """The example topology with default (ascending) transmit orders."""
    return build(4, EXAMPLE1_EDGES)


@pytest.fixture
def hand_schedule():
    return dict(HAND_SCHEDULE)
