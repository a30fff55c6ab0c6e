from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactnet.graph_stats import (
    Graph,
    count_triangles,
    count_triangles_bruteforce,
    degree_chisquare,
    degrees,
    edge_dependence_diagnostic,
    summarize,
)
from contactnet.static_samplers import sample_bernoulli


def complete(n):
    return Graph.from_edges(n, list(combinations(range(n), 2)))


@st.composite
def small_graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = list(combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [e for e, keep in zip(pairs, mask) if keep])


def test_from_edges_rejects_bad_input():
    with pytest.raises(ValueError, match="self-loop"):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError, match="duplicate"):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(ValueError, match="out of range"):
        Graph.from_edges(3, [(0, 3)])


def test_graph_equality_ignores_edge_order():
    a = Graph.from_edges(4, [(0, 1), (2, 3)])
    b = Graph(4, np.array([[2, 3], [0, 1]]))
    assert a == b
    assert a != Graph.from_edges(4, [(0, 1)])


def test_empty_graph_summary():
    s = summarize(Graph.from_edges(5, []))
    assert s.mean_degree == 0 and s.triangle_count == 0 and s.edge_count == 0
    assert s.saturated_fraction is None


def test_complete_graph_summary():
    s = summarize(complete(5))
    assert (s.edge_count, s.triangle_count, s.density) == (10, 10, 1.0)


def test_single_triangle_and_path():
    assert count_triangles(Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])) == 1
    assert count_triangles(Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])) == 0


def test_saturated_fraction_counts_degree_at_cap():
    # star with centre degree 3, leaves degree 1
    g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert summarize(g, d_max=3).saturated_fraction == 0.25
    assert summarize(g, d_max=1).saturated_fraction == 1.0


@settings(max_examples=150, deadline=None)
@given(small_graphs())
def test_triangles_match_bruteforce(g):
    assert count_triangles(g) == count_triangles_bruteforce(g)


@settings(max_examples=100, deadline=None)
@given(small_graphs(max_n=15))
def test_summary_identities(g):
    s = summarize(g, d_max=2)
    n = g.n_vertices
    assert s.mean_degree == 2 * s.edge_count / n
    if n > 1:
        assert s.density == pytest.approx(s.mean_degree / (n - 1), rel=1e-15)
    assert s.degree_histogram.sum() == n
    assert 0 <= s.triangle_count <= comb(n, 3)
    assert np.array_equal(degrees(g), g.adjacency().sum(axis=1))


def test_triangles_on_random_n12_graphs():
    rng = np.random.default_rng(5)
    for _ in range(100):
        g = sample_bernoulli(12, rng.uniform(0.1, 0.9), rng)
        assert count_triangles(g) == count_triangles_bruteforce(g)


def test_bernoulli_triangle_mean():
    # E[t] = C(40,3) 0.2^3 = 79.04
    rng = np.random.default_rng(11)
    t = np.array([count_triangles(sample_bernoulli(40, 0.2, rng)) for _ in range(1000)])
    se = t.std(ddof=1) / np.sqrt(len(t))
    assert abs(t.mean() - 79.04) < 3 * se


def test_dependence_needs_two_samples():
    g = complete(4)
    with pytest.raises(ValueError):
        edge_dependence_diagnostic([g], [[(0, 1), (2, 3)]])


def test_identical_samples_are_degenerate():
    g = Graph.from_edges(5, [(0, 1), (1, 2)])
    pairs = [[(0, 1), (1, 2)], [(0, 1), (3, 4)]]
    table = edge_dependence_diagnostic([g] * 10, pairs)
    assert np.all(table.covariance == 0)
    assert np.all(table.degenerate)
    assert table.within(3).all()


def test_bernoulli_edges_look_independent():
    rng = np.random.default_rng(2)
    samples = [sample_bernoulli(30, 0.2, rng) for _ in range(2000)]
    dyads = np.array(list(combinations(range(30), 2)))
    idx = rng.choice(len(dyads), size=(200, 2))
    idx = idx[idx[:, 0] != idx[:, 1]]
    table = edge_dependence_diagnostic(samples, dyads[idx])
    assert table.within(3).mean() >= 0.95


def test_sparse_bernoulli_edges_look_independent():
    # about 0.2 expected joint occurrences per dyad pair
    rng = np.random.default_rng(5)
    samples = [sample_bernoulli(100, 0.01, rng) for _ in range(2000)]
    dyads = np.array(list(combinations(range(100), 2)))
    idx = rng.choice(len(dyads), size=(300, 2))
    idx = idx[idx[:, 0] != idx[:, 1]]
    table = edge_dependence_diagnostic(samples, dyads[idx])
    assert table.within(3).mean() >= 0.95


def test_dependence_flags_correlated_dyads():
    rng = np.random.default_rng(6)
    both = [Graph.from_edges(4, [(0, 1), (2, 3)] if rng.random() < 0.3 else [])
            for _ in range(500)]
    table = edge_dependence_diagnostic(both, [[(0, 1), (2, 3)]])
    assert not table.within(3)[0]


def test_covariance_matches_numpy():
    rng = np.random.default_rng(0)
    samples = [sample_bernoulli(6, 0.5, rng) for _ in range(50)]
    pairs = np.array([[(0, 1), (0, 2)], [(3, 4), (1, 5)]])
    table = edge_dependence_diagnostic(samples, pairs)
    for k, (d1, d2) in enumerate(pairs):
        x = [g.adjacency()[tuple(d1)] for g in samples]
        y = [g.adjacency()[tuple(d2)] for g in samples]
        assert table.covariance[k] == pytest.approx(np.cov(x, y)[0, 1])


def test_degree_chisquare_accepts_bernoulli_and_rejects_regular():
    rng = np.random.default_rng(4)
    samples = [sample_bernoulli(60, 0.05, rng) for _ in range(200)]
    _, _, pval = degree_chisquare(samples, 0.05)
    assert pval > 0.001
    # a perfect matching: every degree is exactly 1
    matching = Graph.from_edges(60, [(2 * i, 2 * i + 1) for i in range(30)])
    _, _, pval = degree_chisquare([matching] * 50, 1 / 59)
    assert pval < 1e-6
