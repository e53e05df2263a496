"""Random geometric (unit-disk) topology generation.

Nodes are dropped uniformly on a square; two nodes are adjacent iff their
Euclidean distance is at most the radio range.  Adjacency is symmetric and
self-edge free by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

from .errors import ConfigError, TopologyError


@dataclass(frozen=True)
class Topology:
    positions: tuple[tuple[float, float], ...]
    radio_range: float
    neighbors: tuple[tuple[int, ...], ...]  # sorted neighbor ids per node
    connected: bool

    @property
    def node_count(self) -> int:
        return len(self.positions)

    def adjacent(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edge list with u < v, in deterministic order."""
        return [
            (u, v)
            for u in range(len(self.neighbors))
            for v in self.neighbors[u]
            if u < v
        ]


def _is_connected(neighbors: tuple[tuple[int, ...], ...]) -> bool:
    n = len(neighbors)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        u = stack.pop()
        for v in neighbors[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == n


def topology_from_positions(
    positions: list[tuple[float, float]], radio_range: float
) -> Topology:
    """Build the unit-disk adjacency for explicitly placed nodes."""
    if len(positions) < 2:
        raise ConfigError("a topology needs at least two nodes")
    if radio_range <= 0:
        raise ConfigError("radio_range must be positive")
    n = len(positions)
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        xu, yu = positions[u]
        for v in range(u + 1, n):
            if math.dist((xu, yu), positions[v]) <= radio_range:
                nbrs[u].append(v)
                nbrs[v].append(u)
    frozen = tuple(tuple(sorted(ns)) for ns in nbrs)
    return Topology(
        positions=tuple(positions),
        radio_range=radio_range,
        neighbors=frozen,
        connected=_is_connected(frozen),
    )


def build_topology(
    node_count: int, area_side: float, radio_range: float, rng: Random
) -> Topology:
    """Drop ``node_count`` nodes uniformly on the square and link by range.

    The returned topology reports its connectivity status; callers that
    need a connected graph should use :func:`build_connected_topology`.
    """
    if node_count < 2:
        raise ConfigError("node_count must be at least 2")
    if area_side <= 0:
        raise ConfigError("area_side must be positive")
    positions = [
        (rng.uniform(0.0, area_side), rng.uniform(0.0, area_side))
        for _ in range(node_count)
    ]
    return topology_from_positions(positions, radio_range)


def build_connected_topology(
    node_count: int,
    area_side: float,
    radio_range: float,
    rng: Random,
    max_attempts: int = 100,
) -> Topology:
    """Resample until connected, failing loudly after ``max_attempts``."""
    for _ in range(max_attempts):
        topo = build_topology(node_count, area_side, radio_range, rng)
        if topo.connected:
            return topo
    raise TopologyError(
        f"no connected topology after {max_attempts} attempts "
        f"(nodes={node_count}, area={area_side}, range={radio_range})"
    )


def bfs_hop_counts(topology: Topology, source: int) -> list[int]:
    """Shortest hop count from ``source`` to every node (-1 if unreachable)."""
    dist = [-1] * topology.node_count
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in topology.neighbors[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist
