"""Undirected communication topologies and their Laplacian spectra.

Graphs are unweighted and undirected: an edge (i, j) means agents i and j
exchange state information. All indexing is 0-based. The Laplacian is
L = D - A with D the degree matrix; for connected graphs its second
smallest eigenvalue (the Fiedler value) is positive and sets the minimum
admissible static coupling weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Topology",
    "SpectralInfo",
    "build_topology",
    "laplacian",
    "spectral_info",
    "is_connected",
    "ring_topology",
    "path_topology",
    "complete_topology",
    "star_topology",
]


@dataclass(frozen=True)
class Topology:
    """Undirected graph on ``n_agents`` nodes with a normalized edge set.

    ``edges`` holds each undirected edge once as ``(i, j)`` with ``i < j``,
    sorted lexicographically. Instances are immutable; build them through
    :func:`build_topology`.
    """

    n_agents: int
    edges: tuple[tuple[int, int], ...]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Dense 0/1 adjacency matrix (symmetric, zero diagonal)."""
        a = np.zeros((self.n_agents, self.n_agents))
        for i, j in self.edges:
            a[i, j] = 1.0
            a[j, i] = 1.0
        return a

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint index arrays (ei, ej), one entry per edge."""
        if not self.edges:
            empty = np.zeros(0, dtype=int)
            return empty, empty
        arr = np.asarray(self.edges, dtype=int)
        return arr[:, 0], arr[:, 1]

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_agents)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj


@dataclass(frozen=True)
class SpectralInfo:
    """Laplacian matrix with its full symmetric eigen-decomposition.

    ``eigenvalues`` are sorted ascending; ``fiedler`` is the second
    smallest one and is positive exactly when the graph is connected.
    For the single-node graph there is no second eigenvalue and
    ``fiedler`` is ``inf`` (a lone node is trivially connected).
    """

    laplacian: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    fiedler: float


def build_topology(n_agents: int, edge_list) -> Topology:
    """Validate and normalize an edge list into a :class:`Topology`.

    Each pair is stored once with the smaller index first. Self-loops,
    duplicate edges (in either orientation) and out-of-range indices are
    rejected with a ``ValueError`` naming the offending pair.
    """
    if n_agents < 1:
        raise ValueError(f"n_agents must be >= 1, got {n_agents}")
    seen: set[tuple[int, int]] = set()
    for pair in edge_list:
        i, j = int(pair[0]), int(pair[1])
        if i == j:
            raise ValueError(f"self-loop edge ({i}, {j}) is not allowed")
        if not (0 <= i < n_agents and 0 <= j < n_agents):
            raise ValueError(
                f"edge ({i}, {j}) is out of range for {n_agents} agents"
            )
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate edge ({i}, {j})")
        seen.add(key)
    return Topology(n_agents=n_agents, edges=tuple(sorted(seen)))


def laplacian(t: Topology) -> np.ndarray:
    """Graph Laplacian: L_ii = degree(i), L_ij = -1 on edges, 0 otherwise."""
    a = t.adjacency()
    return np.diag(a.sum(axis=1)) - a


def spectral_info(t: Topology) -> SpectralInfo:
    """Full symmetric eigen-decomposition of the Laplacian.

    Uses a dense symmetric eigensolver; the graphs in this problem class
    are small (tens of agents), so no sparse machinery is needed.
    """
    lap = laplacian(t)
    eigenvalues = np.linalg.eigvalsh(lap)
    fiedler = float(eigenvalues[1]) if t.n_agents > 1 else math.inf
    return SpectralInfo(laplacian=lap, eigenvalues=eigenvalues, fiedler=fiedler)


def is_connected(t: Topology) -> bool:
    """Exact connectivity by breadth-first traversal.

    Traversal avoids the tolerance ambiguity of testing the Fiedler value
    against zero; the spectral route serves only as a cross-check.
    """
    if t.n_agents == 1:
        return True
    adj = t.neighbors()
    seen = [False] * t.n_agents
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == t.n_agents


def ring_topology(n: int) -> Topology:
    """Cycle 0-1-...-(n-1)-0."""
    if n < 3:
        raise ValueError(f"a ring needs at least 3 agents, got {n}")
    return build_topology(n, [(i, (i + 1) % n) for i in range(n)])


def path_topology(n: int) -> Topology:
    """Path 0-1-...-(n-1)."""
    return build_topology(n, [(i, i + 1) for i in range(n - 1)])


def complete_topology(n: int) -> Topology:
    """Complete graph on n agents."""
    return build_topology(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_topology(n: int) -> Topology:
    """Star with hub 0."""
    if n < 2:
        raise ValueError(f"a star needs at least 2 agents, got {n}")
    return build_topology(n, [(0, i) for i in range(1, n)])
