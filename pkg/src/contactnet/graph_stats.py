"""Per-graph observables: degrees, density, triangles, saturation, dyad dependence.

Graphs are passed around as :class:`Graph`, a vertex count plus an ``(E, 2)``
integer array of edges with ``u < v``.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np
from numba import njit
from scipy import stats

__all__ = [
    "Graph",
    "GraphSummary",
    "DependenceTable",
    "summarize",
    "count_triangles",
    "count_triangles_bruteforce",
    "degrees",
    "edge_dependence_diagnostic",
    "degree_chisquare",
]


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on vertices ``0..n_vertices-1``."""

    n_vertices: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, n_vertices, edges, validate=True):
        """Build a graph, normalising each pair to ``(min, max)`` and sorting.

        With ``validate`` the edge set is checked for self-loops, duplicates
        and out-of-range ids, raising ``ValueError`` on any of them.
        """
        n = int(n_vertices)
        if n < 1:
            raise ValueError(f"n_vertices must be >= 1, got {n}")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if validate and len(e):
            if e.min() < 0 or e.max() >= n:
                raise ValueError(f"vertex id out of range 0..{n - 1}")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        if len(e):
            key = e[:, 0] * n + e[:, 1]
            order = np.argsort(key, kind="stable")
            key = key[order]
            if validate and np.any(key[1:] == key[:-1]):
                raise ValueError("duplicate edges are not allowed")
            e = e[order]
        return cls(n, e)

    @classmethod
    def from_adjacency(cls, adj):
        adj = np.asarray(adj, dtype=bool)
        u, v = np.nonzero(np.triu(adj, 1))
        return cls(adj.shape[0], np.column_stack([u, v]))

    @property
    def n_edges(self):
        return len(self.edges)

    def adjacency(self):
        a = np.zeros((self.n_vertices, self.n_vertices), dtype=bool)
        a[self.edges[:, 0], self.edges[:, 1]] = True
        a[self.edges[:, 1], self.edges[:, 0]] = True
        return a

    def dyad_keys(self):
        """Integer key ``u * N + v`` for each edge; used for fast membership tests."""
        return self.edges[:, 0] * self.n_vertices + self.edges[:, 1]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n_vertices != other.n_vertices or self.n_edges != other.n_edges:
            return False
        return np.array_equal(np.sort(self.dyad_keys()), np.sort(other.dyad_keys()))

    def __repr__(self):
        return f"Graph(n_vertices={self.n_vertices}, n_edges={self.n_edges})"


@dataclass
class GraphSummary:
    n_vertices: int
    edge_count: int
    mean_degree: float
    density: float
    triangle_count: int
    degree_histogram: np.ndarray = field(repr=False)
    saturated_fraction: float | None = None

    def to_dict(self):
        return {
            "n_vertices": self.n_vertices,
            "edge_count": self.edge_count,
            "mean_degree": self.mean_degree,
            "density": self.density,
            "triangle_count": self.triangle_count,
            "saturated_fraction": self.saturated_fraction,
            "degree_histogram": [int(x) for x in self.degree_histogram],
        }

    def __eq__(self, other):
        if not isinstance(other, GraphSummary):
            return NotImplemented
        a, b = self.to_dict(), other.to_dict()
        return a == b


def degrees(graph):
    return np.bincount(graph.edges.ravel(), minlength=graph.n_vertices)


def _csr(graph):
    n = graph.n_vertices
    e = graph.edges
    both = np.concatenate([e, e[:, ::-1]]) if len(e) else np.empty((0, 2), np.int64)
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(both[:, 0], minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(both[:, 1])


@njit(cache=True)
def _triangles_csr(indptr, indices, edges):
    # Every triangle is seen once from each of its three edges.
    total = 0
    for r in range(edges.shape[0]):
        u = edges[r, 0]
        v = edges[r, 1]
        i, iend = indptr[u], indptr[u + 1]
        j, jend = indptr[v], indptr[v + 1]
        while i < iend and j < jend:
            a = indices[i]
            b = indices[j]
            if a == b:
                total += 1
                i += 1
                j += 1
            elif a < b:
                i += 1
            else:
                j += 1
    return total // 3


def count_triangles(graph):
    """Exact triangle count by edge iteration and sorted-neighbour intersection."""
    if graph.n_edges < 3:
        return 0
    indptr, indices = _csr(graph)
    return int(_triangles_csr(indptr, indices, graph.edges))


def count_triangles_bruteforce(graph):
    """Cubic enumeration over all vertex triples.  Test oracle only."""
    a = graph.adjacency()
    n = graph.n_vertices
    t = 0
    for i in range(n):
        for j in range(i + 1, n):
            if not a[i, j]:
                continue
            for k in range(j + 1, n):
                if a[i, k] and a[j, k]:
                    t += 1
    return t


def summarize(graph, d_max=None):
    n = graph.n_vertices
    deg = degrees(graph)
    te = graph.n_edges
    mean_degree = 2.0 * te / n
    density = te / comb(n, 2) if n > 1 else 0.0
    sat = None
    if d_max is not None:
        sat = float(np.count_nonzero(deg >= d_max)) / n
    return GraphSummary(
        n_vertices=n,
        edge_count=te,
        mean_degree=mean_degree,
        density=density,
        triangle_count=count_triangles(graph),
        degree_histogram=np.bincount(deg, minlength=1),
        saturated_fraction=sat,
    )


@dataclass
class DependenceTable:
    """Sample covariances of edge-indicator pairs across a graph collection."""

    dyad_pairs: np.ndarray
    covariance: np.ndarray
    std_error: np.ndarray
    n_samples: int

    @property
    def degenerate(self):
        return self.std_error == 0

    def within(self, k=3.0):
        """Boolean mask of pairs whose covariance lies within ``k`` SE of zero.

        Degenerate pairs (zero SE) count as within only when the covariance
        is exactly zero.
        """
        se = self.std_error
        cov = self.covariance
        return np.where(se > 0, np.abs(cov) <= k * se, cov == 0)


def _indicator_matrix(samples, dyads):
    n = samples[0].n_vertices
    lo = np.minimum(dyads[:, 0], dyads[:, 1])
    hi = np.maximum(dyads[:, 0], dyads[:, 1])
    keys = lo * n + hi
    out = np.empty((len(samples), len(dyads)), dtype=np.float64)
    for s, g in enumerate(samples):
        out[s] = np.isin(keys, g.dyad_keys())
    return out


def edge_dependence_diagnostic(samples, dyad_pairs):
    """Covariance between the two edge indicators of each dyad pair.

    ``dyad_pairs`` has shape ``(K, 2, 2)``: pair ``k`` compares dyad
    ``dyad_pairs[k, 0]`` with dyad ``dyad_pairs[k, 1]``.  The standard error
    is the one the covariance has when the two indicators are independent,
    ``sd_x * sd_y / sqrt(n)``.  The plug-in SE of centred products is badly
    biased low for sparse graphs, where most samples never see both edges.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise ValueError("need at least 2 samples to estimate a covariance")
    pairs = np.asarray(dyad_pairs, dtype=np.int64).reshape(-1, 2, 2)
    x = _indicator_matrix(samples, pairs[:, 0])
    y = _indicator_matrix(samples, pairs[:, 1])
    n = x.shape[0]
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    cov = (xc * yc).sum(axis=0) / (n - 1)
    se = x.std(axis=0, ddof=1) * y.std(axis=0, ddof=1) / np.sqrt(n)
    return DependenceTable(pairs, cov, se, n)


def degree_chisquare(samples, p, min_expected=5.0):
    """Pooled chi-square test of observed degrees against Binomial(N-1, p).

    Tail bins are merged until each has expected count ``>= min_expected``.
    Returns ``(statistic, dof, pvalue)``; one degree of freedom is charged
    for ``p`` in addition to the usual one, since callers normally estimate it.
    """
    samples = list(samples)
    n = samples[0].n_vertices
    obs = np.zeros(n, dtype=np.float64)
    for g in samples:
        obs += np.bincount(degrees(g), minlength=n)
    total = obs.sum()
    expected = stats.binom.pmf(np.arange(n), n - 1, p) * total

    bins_o, bins_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if bins_e:
            bins_o[-1] += acc_o
            bins_e[-1] += acc_e
        else:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
    bins_o = np.array(bins_o)
    bins_e = np.array(bins_e)
    stat = float(np.sum((bins_o - bins_e) ** 2 / bins_e))
    dof = max(len(bins_o) - 2, 1)
    return stat, dof, float(stats.chi2.sf(stat, dof))
