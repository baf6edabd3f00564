"""Worker communication graphs for the simulated protocols.

Three kinds: ``star`` (every worker talks to a central server only; the
server is not a worker node), ``ring`` (worker i touches i-1 and i+1 mod K)
and ``full`` (every distinct pair connected).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedTopologyError, TopologyError

KINDS = ("star", "ring", "full")


@dataclass(frozen=True)
class Topology:
    """A worker graph: ``adjacency[i]`` lists worker i's neighbours in
    ascending order, workers only (the star's server is implicit)."""

    kind: str
    K: int
    adjacency: tuple[tuple[int, ...], ...]

    def closed_neighborhood(self, k: int) -> tuple[int, ...]:
        """Worker ``k`` together with its neighbours, ascending."""
        return tuple(sorted((*self.adjacency[k], k)))


def make_topology(kind: str, K: int) -> Topology:
    if kind not in KINDS:
        raise TopologyError(f"unknown topology kind {kind!r}; expected one of {KINDS}")
    if K < 1:
        raise TopologyError(f"worker count must be at least 1, got {K}")
    if kind == "star":
        adjacency = tuple(() for _ in range(K))
    elif kind == "ring":
        adjacency = tuple(
            tuple(sorted({(i - 1) % K, (i + 1) % K} - {i})) for i in range(K)
        )
    else:
        adjacency = tuple(
            tuple(j for j in range(K) if j != i) for i in range(K)
        )
    return Topology(kind=kind, K=K, adjacency=adjacency)


def diameter(topo: Topology) -> int:
    """Longest shortest path between two workers, by BFS from every node.

    Raises ``DisconnectedTopologyError`` when some pair has no path, which
    includes the star for K >= 2 (workers only reach each other through the
    server, which is not part of the worker graph).
    """
    K = topo.K
    worst = 0
    for src in range(K):
        dist = [-1] * K
        dist[src] = 0
        frontier = [src]
        while frontier:
            nxt = []
            for node in frontier:
                for nb in topo.adjacency[node]:
                    if dist[nb] < 0:
                        dist[nb] = dist[node] + 1
                        nxt.append(nb)
            frontier = nxt
        if min(dist) < 0:
            raise DisconnectedTopologyError(
                f"{topo.kind} topology with K={K} is not a connected worker graph"
            )
        worst = max(worst, max(dist))
    return worst


def directed_edge_count(topo: Topology) -> int:
    """Number of (sender, receiver) neighbour pairs; one message each when a
    per-edge exchange phase runs."""
    return sum(len(nbs) for nbs in topo.adjacency)


def mixing_matrix(topo: Topology) -> np.ndarray:
    """Uniform gossip weights over each worker's closed neighbourhood.

    Ring and full graphs are regular, so the result is doubly stochastic.
    """
    K = topo.K
    mix = np.zeros((K, K))
    for i in range(K):
        hood = topo.closed_neighborhood(i)
        mix[i, list(hood)] = 1.0 / len(hood)
    return mix
