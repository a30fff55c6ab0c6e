"""Joint graph and focus-assignment state of the contact formation process.

The state lives in flat numpy arrays so that one jitted engine serves both the
Python-level API below and the event loop in :mod:`contactnet.ctmc`.

Layout
------
focus_of[v]            focus of vertex v (0-based)
members[k, :msize[k]]  vertices in focus k; ``mpos[v]`` is v's slot
internal[k]            edges with both endpoints in focus k (e_k)
nbr[v, :deg[v]]        neighbours of v; ``nbr_eid`` holds the matching edge ids
edges[:n_edges]        edge list, swap-removed so deletion is O(1)
fen                    Fenwick tree over at-risk pair counts C(n_k, 2) - e_k
meta                   scalar counters (edges, at-risk pairs, full-row flags)

Rows of ``members`` and ``nbr`` have fixed capacity.  The full-row
counters in ``meta`` track rows that are exactly full; callers grow the
arrays whenever either is non-zero, so every primitive may assume one free
slot per row.
"""

from math import comb

import numpy as np

from . import _kernel as K
from ._rng import make_rng
from .graph_stats import Graph

__all__ = ["DynamicState", "new_state", "read_edgelist", "write_edgelist"]

DENSE_FOCUS_THRESHOLD = K.DENSE_FOCUS_THRESHOLD


_DUMMY_RNG = make_rng(0)
_NO_LOG_F = np.zeros(0, dtype=np.float64)
_NO_LOG_I = np.zeros(0, dtype=np.int64)
_NO_LOG_N = np.zeros(1, dtype=np.int64)


# --- Python-level state --------------------------------------------------------------


def _at_risk(msize, internal):
    return msize * (msize - 1) // 2 - internal


class DynamicState:
    """Graph plus focus assignment with incrementally maintained counters.

    Vertex and focus ids are 0-based.  Construct with :func:`new_state`.
    """

    def __init__(self, n_vertices, n_foci, focus_of, edges=()):
        n, m = int(n_vertices), int(n_foci)
        if n < 1 or m < 1:
            raise ValueError(f"need n_vertices >= 1 and n_foci >= 1, got {n}, {m}")
        focus_of = np.array(focus_of, dtype=np.int64)
        if focus_of.shape != (n,):
            raise ValueError(f"focus vector must have length {n}")
        if n and (focus_of.min() < 0 or focus_of.max() >= m):
            raise ValueError(f"focus ids must lie in 0..{m - 1}")
        graph = Graph.from_edges(n, edges)

        self.focus_of = focus_of
        self.msize = np.bincount(focus_of, minlength=m).astype(np.int64)
        mcap = int(self.msize.max()) + 8
        self.members = np.full((m, mcap), -1, dtype=np.int64)
        self.mpos = np.empty(n, dtype=np.int64)
        fill = np.zeros(m, dtype=np.int64)
        for v in range(n):
            k = focus_of[v]
            self.members[k, fill[k]] = v
            self.mpos[v] = fill[k]
            fill[k] += 1

        e = graph.edges
        self.deg = np.bincount(e.ravel(), minlength=n).astype(np.int64)
        dcap = int(self.deg.max(initial=0)) + 8
        self.nbr = np.full((n, dcap), -1, dtype=np.int64)
        self.nbr_eid = np.full((n, dcap), -1, dtype=np.int64)
        self.edges = np.zeros((max(2 * len(e), 64), 2), dtype=np.int64)
        self.internal = np.zeros(m, dtype=np.int64)
        self.meta = np.zeros(4, dtype=np.int64)
        self.fen = K.fen_build(_at_risk(self.msize, self.internal))
        self.meta[K.AR] = int(_at_risk(self.msize, self.internal).sum())
        self.deg[:] = 0
        for u, v in e:
            self._call(K.OP_ADD, int(u), int(v))

    def _call(self, op, a=-1, b=-1, rng=_DUMMY_RNG, rates=(0.0, 0.0, 0.0),
              exclude_current=False, t=0.0, horizon=0.0, max_events=0, log=None):
        if log is None:
            log_on, lt, lk, la, lb, ln = False, _NO_LOG_F, _NO_LOG_I, _NO_LOG_I, _NO_LOG_I, _NO_LOG_N
        else:
            log_on = True
            lt, lk, la, lb, ln = log
        return K.engine(op, a, b, rng, self.focus_of, self.members, self.msize, self.mpos,
                        self.internal, self.nbr, self.nbr_eid, self.deg, self.edges,
                        self.fen, self.meta, float(rates[0]), float(rates[1]),
                        float(rates[2]), exclude_current, float(t), float(horizon),
                        int(max_events), log_on, lt, lk, la, lb, ln)

    # -- capacity -------------------------------------------------------------------

    def _ensure_capacity(self):
        """Grow any array with no headroom; safe to call at any time."""
        if self.meta[K.FULLFOC] > 0:
            cap = self.members.shape[1]
            grown = np.full((self.n_foci, 2 * cap), -1, dtype=np.int64)
            grown[:, :cap] = self.members
            self.members = grown
            self.meta[K.FULLFOC] = 0
        if self.meta[K.FULLDEG] > 0:
            cap = self.nbr.shape[1]
            for name in ("nbr", "nbr_eid"):
                old = getattr(self, name)
                grown = np.full((self.n_vertices, 2 * cap), -1, dtype=np.int64)
                grown[:, :cap] = old
                setattr(self, name, grown)
            self.meta[K.FULLDEG] = 0
        if self.meta[K.NE] >= self.edges.shape[0]:
            grown = np.zeros((2 * self.edges.shape[0], 2), dtype=np.int64)
            grown[: self.edges.shape[0]] = self.edges
            self.edges = grown

    # -- read access ----------------------------------------------------------------

    @property
    def n_vertices(self):
        return self.focus_of.shape[0]

    @property
    def n_foci(self):
        return self.msize.shape[0]

    @property
    def total_edges(self):
        return int(self.meta[K.NE])

    @property
    def internal_edges(self):
        return self.internal.copy()

    @property
    def focus_sizes(self):
        return self.msize.copy()

    @property
    def total_at_risk(self):
        return int(self.meta[K.AR])

    def members_of(self, k):
        return self.members[k, : self.msize[k]].copy()

    def at_risk_pairs(self, k=None):
        ar = _at_risk(self.msize, self.internal)
        return ar if k is None else int(ar[k])

    def has_edge(self, u, v):
        if u == v:
            return False
        if self.deg[u] > self.deg[v]:
            u, v = v, u
        return bool(np.any(self.nbr[u, : self.deg[u]] == v))

    def degree(self):
        return self.deg.copy()

    def edge_array(self):
        return self.edges[: self.total_edges].copy()

    def to_graph(self):
        return Graph.from_edges(self.n_vertices, self.edge_array(), validate=False)

    def adjacency_matrix(self):
        return self.to_graph().adjacency()

    def copy(self):
        return DynamicState(self.n_vertices, self.n_foci, self.focus_of, self.edge_array())

    def same_as(self, other):
        """Same foci and same edge set (edge-list order is ignored)."""
        return (
            self.n_foci == other.n_foci
            and np.array_equal(self.focus_of, other.focus_of)
            and self.to_graph() == other.to_graph()
        )

    def recount(self):
        """Counters recomputed from scratch: ``(total_edges, internal, sizes)``."""
        e = self.edge_array()
        fu, fv = self.focus_of[e[:, 0]], self.focus_of[e[:, 1]]
        internal = np.bincount(fu[fu == fv], minlength=self.n_foci)
        sizes = np.bincount(self.focus_of, minlength=self.n_foci)
        return len(e), internal, sizes

    def check_invariants(self):
        """Raise ``AssertionError`` if any maintained counter disagrees with a recount."""
        te, internal, sizes = self.recount()
        e = self.edge_array()
        adj = self.adjacency_matrix()
        assert not adj.diagonal().any(), "self-loop present"
        assert adj.sum() == 2 * te, "duplicate edges in edge list"
        assert te == self.total_edges
        assert np.array_equal(internal, self.internal), "internal edge counts drifted"
        assert np.array_equal(sizes, self.msize), "focus sizes drifted"
        assert np.array_equal(self.deg, adj.sum(axis=1)), "degrees drifted"
        ar = _at_risk(self.msize, self.internal)
        assert (ar >= 0).all()
        assert ar.sum() == self.meta[K.AR]
        for k in range(self.n_foci):
            mem = self.members[k, : self.msize[k]]
            assert np.all(self.focus_of[mem] == k)
            assert np.all(self.mpos[mem] == np.arange(len(mem)))
        for i, (u, v) in enumerate(e):
            for a, b in ((u, v), (v, u)):
                row = self.nbr[a, : self.deg[a]]
                assert self.nbr_eid[a, np.flatnonzero(row == b)[0]] == i
        prefix = np.concatenate([[0], np.cumsum(ar)])
        for k in range(self.n_foci + 1):
            assert K.fen_prefix(self.fen, k) == prefix[k], "Fenwick tree drifted"

    # -- mutation -------------------------------------------------------------------

    def toggle_edge(self, u, v, present):
        """Add (``present=True``) or remove the edge ``{u, v}``."""
        assert u != v, "self-loop"
        assert self.has_edge(u, v) != bool(present), "toggle precondition violated"
        self._ensure_capacity()
        self._call(K.OP_ADD if present else K.OP_REMOVE, int(u), int(v))

    def migrate(self, v, dest):
        if not 0 <= dest < self.n_foci:
            raise ValueError(f"destination focus {dest} out of range 0..{self.n_foci - 1}")
        self._ensure_capacity()
        self._call(K.OP_MIGRATE, int(v), int(dest))

    def sample_at_risk_pair(self, rng):
        """Uniform non-adjacent co-focal pair, or ``None`` if there is none."""
        rng = make_rng(rng)
        u, v = self._call(K.OP_SAMPLE, rng=rng)[3:]
        if u < 0:
            return None
        return int(u), int(v)


def new_state(n_vertices, n_foci, initial_foci="uniform", initial_graph=(), seed=None):
    """Create a :class:`DynamicState`.

    ``initial_foci`` is ``"uniform"`` (each vertex placed independently and
    uniformly over the foci, drawn from ``seed``) or an explicit 0-based
    focus vector.  ``initial_graph`` is a :class:`Graph` or an edge list.
    """
    n, m = int(n_vertices), int(n_foci)
    if n < 1 or m < 1:
        raise ValueError(f"need n_vertices >= 1 and n_foci >= 1, got {n}, {m}")
    if isinstance(initial_foci, str):
        if initial_foci != "uniform":
            raise ValueError(f"unknown focus rule {initial_foci!r}")
        focus_of = make_rng(seed).integers(0, m, size=n)
    else:
        focus_of = initial_foci
    if isinstance(initial_graph, Graph):
        if initial_graph.n_vertices != n:
            raise ValueError("initial graph has the wrong number of vertices")
        initial_graph = initial_graph.edges
    return DynamicState(n, m, focus_of, initial_graph)


# --- text I/O -------------------------------------------------------------------------


def read_edgelist(path):
    """Read an edge list with an optional focus line.

    Format: ``#`` comments, an optional ``N <count>`` line, an optional
    ``foci f1 f2 ...`` line of 1-based focus ids, then one ``u v`` pair of
    0-based vertex ids per line.  Returns ``(graph, foci)`` with ``foci``
    converted to 0-based (or ``None``).
    """
    n = None
    foci = None
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, *rest = line.split()
            if head == "N":
                n = int(rest[0])
            elif head == "foci":
                foci = np.array([int(x) - 1 for x in rest], dtype=np.int64)
            else:
                if len(rest) != 1:
                    raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
                pairs.append((int(head), int(rest[0])))
    if n is None:
        if foci is not None:
            n = len(foci)
        elif pairs:
            n = max(max(p) for p in pairs) + 1
        else:
            raise ValueError(f"{path}: cannot infer vertex count from an empty file")
    if foci is not None and (len(foci) != n or foci.min() < 0):
        raise ValueError(f"{path}: focus line must hold {n} ids, each >= 1")
    return Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2)), foci


def write_edgelist(path, graph, foci=None):
    with open(path, "w") as fh:
        fh.write(f"N {graph.n_vertices}\n")
        if foci is not None:
            fh.write("foci " + " ".join(str(int(k) + 1) for k in foci) + "\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")
