from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from contactnet.graph_state import DynamicState, new_state, read_edgelist, write_edgelist
from contactnet.graph_stats import Graph

from oracles import enumerate_at_risk


def test_single_focus_empty_graph():
    s = new_state(3, 1)
    assert s.focus_sizes.tolist() == [3]
    assert s.internal_edges.tolist() == [0]
    assert s.at_risk_pairs(0) == 3


def test_cross_focus_edge_is_not_internal():
    s = new_state(2, 2, initial_foci=[0, 1], initial_graph=[(0, 1)])
    assert s.total_edges == 1
    assert s.internal_edges.tolist() == [0, 0]


def test_rejects_invalid_initial_graph():
    for bad in ([(0, 0)], [(0, 1), (1, 0)], [(0, 5)]):
        with pytest.raises(ValueError):
            new_state(3, 1, initial_graph=bad)
    with pytest.raises(ValueError):
        new_state(3, 2, initial_foci=[0, 1, 2])
    with pytest.raises(ValueError):
        new_state(0, 1)


def test_uniform_focus_sizes():
    # n_k ~ Binomial(100, 1/10)
    sizes = np.array([new_state(100, 10, seed=s).focus_sizes for s in range(1000)])
    mean = sizes.mean(axis=0)
    se = sizes.std(axis=0, ddof=1) / np.sqrt(len(sizes))
    assert np.all(np.abs(mean - 10) < 3 * se + 1e-12)
    assert np.all(sizes.sum(axis=1) == 100)


def test_toggle_updates_internal_counts():
    s = new_state(4, 3, initial_foci=[2, 2, 0, 1])
    s.toggle_edge(0, 1, True)
    assert s.internal_edges.tolist() == [0, 0, 1] and s.total_edges == 1
    s.toggle_edge(2, 3, True)
    s.toggle_edge(2, 3, False)
    assert s.internal_edges.tolist() == [0, 0, 1] and s.total_edges == 1
    s.check_invariants()


def test_toggle_preconditions_are_asserted():
    s = new_state(3, 1, initial_graph=[(0, 1)])
    with pytest.raises(AssertionError):
        s.toggle_edge(0, 1, True)
    with pytest.raises(AssertionError):
        s.toggle_edge(1, 2, False)
    with pytest.raises(AssertionError):
        s.toggle_edge(2, 2, True)


def test_isolated_vertex_migration_changes_sizes_only():
    s = new_state(4, 2, initial_foci=[0, 0, 1, 1], initial_graph=[(0, 1)])
    s.migrate(2, 0)
    assert s.focus_sizes.tolist() == [3, 1]
    assert s.internal_edges.tolist() == [1, 0]


def test_migration_moves_internal_edges():
    # v=0 has two neighbours in focus 0 and one in focus 1
    s = new_state(5, 2, initial_foci=[0, 0, 0, 1, 1],
                  initial_graph=[(0, 1), (0, 2), (0, 3), (1, 2), (3, 4)])
    before = s.internal_edges
    s.migrate(0, 1)
    assert (s.internal_edges - before).tolist() == [-2, 1]
    s.migrate(0, 1)  # self-move
    assert (s.internal_edges - before).tolist() == [-2, 1]
    s.check_invariants()
    with pytest.raises(ValueError):
        s.migrate(0, 2)


def test_random_toggles_match_recount():
    rng = np.random.default_rng(0)
    s = new_state(20, 3, seed=1)
    for _ in range(10_000):
        u, v = rng.choice(20, size=2, replace=False)
        s.toggle_edge(int(u), int(v), not s.has_edge(u, v))
    s.check_invariants()


def test_random_migrations_match_recount_after_every_move():
    rng = np.random.default_rng(1)
    s = new_state(50, 5, seed=2, initial_graph=Graph.from_edges(
        50, list(combinations(range(50), 2))[::7]))
    for _ in range(10_000):
        s.migrate(int(rng.integers(50)), int(rng.integers(5)))
        te, internal, sizes = s.recount()
        assert te == s.total_edges
        assert np.array_equal(internal, s.internal_edges)
        assert np.array_equal(sizes, s.focus_sizes)
    s.check_invariants()


def test_capacity_growth_under_dense_use():
    # start with small row capacities and fill a single focus completely
    s = new_state(30, 1)
    for u, v in combinations(range(30), 2):
        s.toggle_edge(u, v, True)
    s.check_invariants()
    assert s.total_at_risk == 0
    t = new_state(30, 3, initial_foci=[0] * 30)
    for v in range(30):
        t.migrate(v, 1)
    t.check_invariants()


def test_at_risk_counts_match_enumeration():
    rng = np.random.default_rng(3)
    for trial in range(50):
        n = int(rng.integers(2, 31))
        m = int(rng.integers(1, 5))
        p = rng.uniform(0, 0.8)
        edges = [e for e in combinations(range(n), 2) if rng.random() < p]
        s = new_state(n, m, seed=trial, initial_graph=edges)
        assert s.total_at_risk == len(enumerate_at_risk(s))
        f = s.focus_of
        for k in range(m):
            count = sum(1 for u, v in enumerate_at_risk(s) if f[u] == k)
            assert s.at_risk_pairs(k) == count


def test_sample_at_risk_uniform_on_triangle():
    s = new_state(3, 1)
    rng = np.random.default_rng(7)
    counts = {}
    for _ in range(10_000):
        pair = s.sample_at_risk_pair(rng)
        counts[pair] = counts.get(pair, 0) + 1
    assert set(counts) == {(0, 1), (0, 2), (1, 2)}
    for c in counts.values():
        freq = c / 10_000
        assert abs(freq - 1 / 3) < 3 * np.sqrt((1 / 3) * (2 / 3) / 10_000)


@pytest.mark.parametrize("dense", [False, True])
def test_sample_at_risk_chisquare(dense):
    # sparse state uses rejection; dense state triggers the enumeration fallback
    foci = [0] * 5 + [1] * 3
    if dense:
        edges = [e for e in combinations(range(5), 2) if e not in {(0, 1), (2, 4), (3, 4)}]
    else:
        edges = [(0, 1), (0, 2), (5, 6), (2, 6)]
    s = new_state(8, 2, initial_foci=foci, initial_graph=edges)
    support = sorted(enumerate_at_risk(s))
    assert len(support) <= 10
    rng = np.random.default_rng(8)
    counts = dict.fromkeys(support, 0)
    for _ in range(100_000):
        pair = s.sample_at_risk_pair(rng)
        counts[pair] += 1
    obs = np.array([counts[p] for p in support])
    assert stats.chisquare(obs).pvalue > 0.001


def test_never_samples_adjacent_or_cross_focus():
    rng = np.random.default_rng(9)
    s = new_state(25, 4, seed=3, initial_graph=list(combinations(range(25), 2))[::3])
    for _ in range(2000):
        u, v = s.sample_at_risk_pair(rng)
        assert s.focus_of[u] == s.focus_of[v] and not s.has_edge(u, v)


def test_saturated_focus_is_never_chosen():
    s = new_state(4, 2, initial_foci=[0, 0, 1, 1], initial_graph=[(0, 1)])
    rng = np.random.default_rng(0)
    assert all(s.sample_at_risk_pair(rng) == (2, 3) for _ in range(200))


def test_no_at_risk_pairs_returns_none():
    assert new_state(3, 3, initial_foci=[0, 1, 2]).sample_at_risk_pair(0) is None


ops = st.lists(
    st.tuples(st.sampled_from(["toggle", "migrate"]), st.integers(0, 11),
              st.integers(0, 11)),
    max_size=200,
)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), ops)
def test_invariants_survive_any_operation_sequence(m, seq):
    s = new_state(12, m, seed=0)
    for op, a, b in seq:
        if op == "toggle":
            if a != b:
                s.toggle_edge(a, b, not s.has_edge(a, b))
        else:
            s.migrate(a, b % m)
    s.check_invariants()
    assert s.total_at_risk == len(enumerate_at_risk(s))


def test_copy_is_independent():
    s = new_state(6, 2, seed=0, initial_graph=[(0, 1)])
    c = s.copy()
    c.toggle_edge(2, 3, True)
    assert s.total_edges == 1 and c.total_edges == 2
    assert not s.same_as(c)


def test_edgelist_roundtrip(tmp_path):
    g = Graph.from_edges(5, [(0, 1), (3, 4)])
    foci = np.array([0, 1, 1, 2, 0])
    path = tmp_path / "g.txt"
    write_edgelist(path, g, foci)
    text = path.read_text()
    assert "foci 1 2 2 3 1" in text
    g2, foci2 = read_edgelist(path)
    assert g2 == g and foci2.tolist() == foci.tolist()


def test_edgelist_without_header(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("# comment\n0 1\n1 2\n")
    g, foci = read_edgelist(path)
    assert g.n_vertices == 3 and g.n_edges == 2 and foci is None


def test_state_is_a_dynamic_state():
    assert isinstance(new_state(2, 1), DynamicState)
