from itertools import combinations
from math import comb

import numpy as np
import pytest
from scipy import stats

from contactnet.graph_stats import count_triangles, degrees
from contactnet.static_samplers import (
    BURNIN_PER_DYAD,
    THINNING_PER_DYAD,
    ConstrainedModel,
    _unrank_pairs,
    expected_triangles_bernoulli,
    krivitsky_tie_probability,
    sample_bernoulli,
    sample_constrained,
    sample_krivitsky,
)


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return x.mean(), x.std(ddof=1) / np.sqrt(len(x))


@pytest.mark.parametrize("n", [2, 3, 7, 100, 1601])
def test_unrank_pairs_matches_enumeration(n):
    pairs = np.array(list(combinations(range(n), 2)))
    assert np.array_equal(_unrank_pairs(np.arange(comb(n, 2)), n), pairs)


def test_bernoulli_extremes():
    assert sample_bernoulli(10, 0, 1).n_edges == 0
    assert sample_bernoulli(10, 1, 1).n_edges == 45
    with pytest.raises(ValueError):
        sample_bernoulli(10, 1.5, 1)


def test_bernoulli_edge_count_mean():
    rng = np.random.default_rng(0)
    e = [sample_bernoulli(100, 0.1, rng).n_edges for _ in range(10_000)]
    m, se = mean_se(e)
    assert abs(m - 495) < 3 * se


def test_bernoulli_same_seed_same_graph():
    assert sample_bernoulli(50, 0.2, 3) == sample_bernoulli(50, 0.2, 3)


def test_krivitsky_probability():
    assert krivitsky_tie_probability(10, 10) == 0.5
    n, d = 10**5, 2.0
    assert abs((n - 1) * krivitsky_tie_probability(n, d) / d - 1) < 1e-3
    with pytest.raises(ValueError):
        krivitsky_tie_probability(10, 0)


def test_krivitsky_mean_degree_stable_under_doubling():
    rng = np.random.default_rng(1)
    a = mean_se([2 * sample_krivitsky(500, 2, rng).n_edges / 500 for _ in range(1000)])
    b = mean_se([2 * sample_krivitsky(1000, 2, rng).n_edges / 1000 for _ in range(1000)])
    # the two 95% intervals overlap; the exact means differ by only 0.006
    assert abs(a[0] - b[0]) < 1.96 * (a[1] + b[1])


def test_krivitsky_dyads_uncorrelated():
    rng = np.random.default_rng(2)
    adj = np.array([sample_krivitsky(10, 2, rng).adjacency()[[0, 2], [1, 3]]
                    for _ in range(100_000)], dtype=float)
    x, y = adj[:, 0] - adj[:, 0].mean(), adj[:, 1] - adj[:, 1].mean()
    prod = x * y
    assert abs(prod.mean()) < 3 * prod.std(ddof=1) / np.sqrt(len(prod))


def test_expected_triangles():
    assert expected_triangles_bernoulli(10, 0) == 0
    assert expected_triangles_bernoulli(3, 1) == 1
    assert expected_triangles_bernoulli(50, 0.1) == pytest.approx(19.6)
    rng = np.random.default_rng(3)
    t = [count_triangles(sample_bernoulli(50, 0.1, rng)) for _ in range(10_000)]
    m, se = mean_se(t)
    assert abs(m - 19.6) < 3 * se


def test_constrained_model_defaults_and_validation():
    m = ConstrainedModel(100, 0.12, 12)
    assert m.burnin == round(BURNIN_PER_DYAD * comb(100, 2) * 0.1)
    assert m.thinning == round(THINNING_PER_DYAD * comb(100, 2) * 0.1)
    assert ConstrainedModel(100, 0.12, 12, scale=1).burnin == 500 * 4950
    for bad in [(1, 0.1, 1), (10, 0, 3), (10, 1, 3), (10, 0.1, 0), (10, 0.1, 10)]:
        with pytest.raises(ValueError):
            ConstrainedModel(*bad)
    with pytest.raises(ValueError):
        ConstrainedModel(10, 0.1, 3, burnin=-1)


def test_constrained_respects_cap():
    draws = sample_constrained(ConstrainedModel(40, 0.4, 3, burnin=2000, thinning=300), 200, 0)
    assert all(degrees(g).max() <= 3 for g in draws)
    assert len(draws) == 200


def test_constrained_without_cap_is_bernoulli():
    n, p = 12, 0.3
    draws = sample_constrained(ConstrainedModel(n, p, n - 1, burnin=5000, thinning=200), 5000, 1)
    m, se = mean_se([g.n_edges for g in draws])
    assert abs(m - p * comb(n, 2)) < 3 * se


def graph_key(g):
    return tuple(sorted(map(tuple, g.edges.tolist())))


def enumerate_capped(n, d_max):
    pairs = list(combinations(range(n), 2))
    out = []
    for mask in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        deg = np.zeros(n, int)
        for u, v in edges:
            deg[u] += 1
            deg[v] += 1
        if deg.max(initial=0) <= d_max:
            out.append(tuple(edges))
    return out


@pytest.mark.parametrize("p,d_max,n_support", [(0.5, 1, 10), (0.3, 2, None)])
def test_constrained_stationary_law_on_four_vertices(p, d_max, n_support):
    support = enumerate_capped(4, d_max)
    if n_support is not None:
        assert len(support) == n_support
    weight = np.array([p ** len(g) * (1 - p) ** (6 - len(g)) for g in support])
    target = weight / weight.sum()
    model = ConstrainedModel(4, p, d_max, burnin=1000, thinning=60)
    draws = sample_constrained(model, 100_000, seed=5)
    index = {g: i for i, g in enumerate(support)}
    counts = np.zeros(len(support))
    for g in draws:
        counts[index[graph_key(g)]] += 1
    assert stats.chisquare(counts, target * len(draws)).pvalue > 0.001


def test_constrained_deterministic():
    m = ConstrainedModel(30, 0.2, 4, burnin=1000, thinning=100)
    a = sample_constrained(m, 5, seed=9)
    b = sample_constrained(m, 5, seed=9)
    assert all(x == y for x, y in zip(a, b))
