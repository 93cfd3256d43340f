"""k-clique enumeration and per-epoch clique schedules.

Detection subgraphs are k-cliques of the visibility graph; fully connected
subgraphs of 5 or more vertices keep their shape in 3D even after losing
any single vertex, which is what makes a single faulty member stand out.
k = 6 is the operational size; the enumerator works for any k >= 1.

Enumeration is the classic arboricity-style recursion: order vertices by
degree, and for each vertex expand cliques inside the subgraph induced by
its higher-ranked neighbors.  Each clique is reported exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import ConstellationConfig, propagate
from .linkgraph import VisibilityGraph, build_visibility_graph

Clique = tuple[int, ...]


@dataclass(frozen=True)
class ScheduleEntry:
    t: float
    cliques: tuple[Clique, ...]


@dataclass(frozen=True)
class CliqueSchedule:
    """Cliques of the predicted topology at each epoch, strictly increasing t."""

    entries: tuple[ScheduleEntry, ...]

    def __post_init__(self):
        ts = [e.t for e in self.entries]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("schedule epochs must be strictly increasing")


def list_k_cliques(graph: VisibilityGraph, k: int) -> list[Clique]:
    """All k-cliques of the graph, each once, lexicographically sorted."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = graph.n
    if k > n:
        return []
    adj = graph.adjacency
    # Rank vertices by ascending degree (ties by id); expanding only toward
    # higher-ranked neighbors bounds the recursion by the graph's degeneracy.
    degrees = adj.sum(axis=1)
    order = sorted(range(n), key=lambda v: (degrees[v], v))
    rank = {v: r for r, v in enumerate(order)}

    neighbors = [set(np.nonzero(adj[v])[0].tolist()) for v in range(n)]
    out: list[Clique] = []

    def extend(prefix: list[int], candidates: set[int]):
        if len(prefix) == k:
            out.append(tuple(sorted(prefix)))
            return
        for v in sorted(candidates, key=lambda u: rank[u]):
            extend(prefix + [v], {u for u in candidates & neighbors[v] if rank[u] > rank[v]})

    for v in order:
        extend([v], {u for u in neighbors[v] if rank[u] > rank[v]})
    out.sort()
    return out


def cliques_containing(cliques: list[Clique] | tuple[Clique, ...], sat: int) -> int:
    """Number of cliques that include the given satellite id."""
    return sum(1 for c in cliques if sat in c)


def remove_satellite(cliques: list[Clique], sat: int) -> list[Clique]:
    """Cliques that do not contain the given satellite, order preserved."""
    return [c for c in cliques if sat not in c]


def build_clique_schedule(
    config: ConstellationConfig, times: list[float] | np.ndarray, k: int
) -> CliqueSchedule:
    """Enumerate k-cliques of the propagated topology at each epoch."""
    entries = []
    for t in times:
        graph = build_visibility_graph(propagate(config, float(t)), config.body.radius)
        entries.append(ScheduleEntry(t=float(t), cliques=tuple(list_k_cliques(graph, k))))
    return CliqueSchedule(entries=tuple(entries))
