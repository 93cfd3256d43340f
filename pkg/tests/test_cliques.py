import itertools
from math import comb

import numpy as np
import pytest

from satfd.cliques import (
    CliqueSchedule,
    ScheduleEntry,
    build_clique_schedule,
    cliques_containing,
    list_k_cliques,
    remove_satellite,
)
from satfd.constellation import load_bundled, orbital_period
from satfd.linkgraph import VisibilityGraph


def make_graph(n, edges):
    adj = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        adj[i, j] = adj[j, i] = True
    return VisibilityGraph(n=n, adjacency=adj, t=0.0)


def complete_graph(n):
    return make_graph(n, itertools.combinations(range(n), 2))


def brute_force_cliques(graph, k):
    """Oracle: filter all C(n, k) subsets."""
    adj = graph.adjacency
    return [
        c for c in itertools.combinations(range(graph.n), k)
        if all(adj[a, b] for a, b in itertools.combinations(c, 2))
    ]


class TestListKCliques:
    def test_k6_of_k6(self):
        assert list_k_cliques(complete_graph(6), 6) == [tuple(range(6))]

    def test_k8_binomial_count(self):
        assert len(list_k_cliques(complete_graph(8), 6)) == comb(8, 6)

    def test_empty_when_too_large(self):
        assert list_k_cliques(complete_graph(4), 6) == []

    def test_matches_brute_force_on_random_graphs(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            n = int(rng.integers(4, 13))
            p = rng.uniform(0.2, 0.9)
            edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
            graph = make_graph(n, edges)
            for k in range(3, 7):
                assert list_k_cliques(graph, k) == brute_force_cliques(graph, k)

    def test_every_clique_fully_connected(self):
        rng = np.random.default_rng(33)
        n = 12
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.6]
        graph = make_graph(n, edges)
        for clique in list_k_cliques(graph, 5):
            for a, b in itertools.combinations(clique, 2):
                assert graph.adjacency[a, b]

    def test_edge_addition_monotone(self):
        rng = np.random.default_rng(4)
        n = 10
        all_edges = list(itertools.combinations(range(n), 2))
        rng.shuffle(all_edges)
        kept = all_edges[: len(all_edges) // 2]
        before = len(list_k_cliques(make_graph(n, kept), 4))
        after = len(list_k_cliques(make_graph(n, kept + [all_edges[-1]]), 4))
        assert after >= before

    def test_mars_walker_per_satellite_floor(self):
        # every satellite keeps at least 32 self-containing 6-cliques
        config = load_bundled("walker_mars")
        period = orbital_period(config.satellites[0].a, config.body.mu)
        times = np.linspace(0.0, period, 20)
        schedule = build_clique_schedule(config, times, k=6)
        for entry in schedule.entries:
            for sat in range(12):
                assert cliques_containing(entry.cliques, sat) >= 32


class TestCliqueOps:
    def test_containing_counts(self):
        cliques = list_k_cliques(complete_graph(6), 6)
        assert cliques_containing(cliques, 3) == 1
        assert cliques_containing([], 3) == 0

    def test_remove_satellite(self):
        assert remove_satellite([tuple(range(6))], 3) == []
        assert remove_satellite([tuple(range(6))], 7) == [tuple(range(6))]

    def test_remove_from_k8(self):
        cliques = list_k_cliques(complete_graph(8), 6)
        remaining = remove_satellite(cliques, 0)
        # C(7,6) = 7 cliques avoid vertex 0
        assert len(remaining) == comb(7, 6)
        assert all(0 not in c for c in remaining)


class TestSchedule:
    def test_epochs_strictly_increasing(self):
        entry = ScheduleEntry(t=0.0, cliques=())
        with pytest.raises(ValueError):
            CliqueSchedule(entries=(entry, entry))

    def test_build_matches_single_epoch(self):
        config = load_bundled("elfo_moon")
        schedule = build_clique_schedule(config, [0.0, 60.0], k=6)
        assert [e.t for e in schedule.entries] == [0.0, 60.0]
        assert all(len(c) == 6 for e in schedule.entries for c in e.cliques)
