"""Cross-sectional reference-model samplers.

* homogeneous Bernoulli graphs;
* the sparse (Krivitsky) reference, a Bernoulli graph with edge logit
  ``log d - log N``;
* the edge-only model restricted to graphs of maximum degree ``d_max``,
  sampled by single-dyad Metropolis toggles.
"""

from dataclasses import dataclass
from math import comb

import numpy as np
from numba import njit

from ._rng import make_rng, randbelow
from .graph_stats import Graph

__all__ = [
    "ConstrainedModel",
    "sample_bernoulli",
    "krivitsky_tie_probability",
    "sample_krivitsky",
    "sample_constrained",
    "expected_triangles_bernoulli",
    "BURNIN_PER_DYAD",
    "THINNING_PER_DYAD",
]

# the reference protocol runs 500 * C(N, 2) burn-in and 250 * C(N, 2) thinning toggles
BURNIN_PER_DYAD = 500
THINNING_PER_DYAD = 250


def _unrank_pairs(idx, n):
    """Map row-major upper-triangle indices to pairs ``(i, j)`` with ``i < j``."""
    idx = np.asarray(idx, dtype=np.int64)
    row_start = lambda i: i * (2 * n - i - 1) // 2
    i = ((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8.0 * idx)) // 2).astype(np.int64)
    # the float estimate can land one row off at row boundaries
    i -= idx < row_start(i)
    i += idx >= row_start(i + 1)
    j = idx - row_start(i) + i + 1
    return np.column_stack([i, j])


def sample_bernoulli(n_vertices, p, seed=None):
    """Each of the C(N, 2) dyads present independently with probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = make_rng(seed)
    n_pairs = comb(n_vertices, 2)
    hits = np.flatnonzero(rng.random(n_pairs) < p)
    return Graph(n_vertices, _unrank_pairs(hits, n_vertices))


def krivitsky_tie_probability(n_vertices, mean_degree):
    """``logit^-1(log d - log N) = d / (N + d)``."""
    if not mean_degree > 0:
        raise ValueError(f"target mean degree must be positive, got {mean_degree}")
    return mean_degree / (n_vertices + mean_degree)


def sample_krivitsky(n_vertices, mean_degree, seed=None):
    """Draw from the sparse reference model.  Implied mean degree is ``(N - 1) p``."""
    return sample_bernoulli(n_vertices, krivitsky_tie_probability(n_vertices, mean_degree), seed)


def expected_triangles_bernoulli(n_vertices, p):
    return comb(n_vertices, 3) * p**3


@dataclass
class ConstrainedModel:
    """Edge-only model on graphs with maximum degree ``d_max``.

    ``burnin`` and ``thinning`` are toggle counts.  Leave them as ``None`` to
    use the reference protocol (500 and 250 times C(N, 2)) multiplied by
    ``scale``.
    """

    n_vertices: int
    tie_prob: float
    d_max: int
    burnin: int | None = None
    thinning: int | None = None
    scale: float = 0.1

    def __post_init__(self):
        n = self.n_vertices
        if n < 2:
            raise ValueError("need at least 2 vertices")
        if not 0 < self.tie_prob < 1:
            raise ValueError(f"tie_prob must lie in (0, 1), got {self.tie_prob}")
        if not 1 <= self.d_max <= n - 1:
            raise ValueError(f"d_max must lie in [1, N-1], got {self.d_max}")
        dyads = comb(n, 2)
        if self.burnin is None:
            self.burnin = int(round(BURNIN_PER_DYAD * dyads * self.scale))
        if self.thinning is None:
            self.thinning = max(1, int(round(THINNING_PER_DYAD * dyads * self.scale)))
        if self.burnin < 0 or self.thinning < 0:
            raise ValueError("burnin and thinning must be >= 0")


@njit(cache=True)
def _metropolis(rng, adj, deg, n_steps, d_max, odds):
    # acceptance: add with min(1, p/(1-p)), delete with min(1, (1-p)/p)
    n = adj.shape[0]
    a_add = min(1.0, odds)
    a_del = min(1.0, 1.0 / odds)
    for _ in range(n_steps):
        i = randbelow(rng, n)
        j = randbelow(rng, n - 1)
        if j >= i:
            j += 1
        if adj[i, j]:
            if a_del >= 1.0 or rng.random() < a_del:
                adj[i, j] = False
                adj[j, i] = False
                deg[i] -= 1
                deg[j] -= 1
        else:
            if deg[i] >= d_max or deg[j] >= d_max:
                continue
            if a_add >= 1.0 or rng.random() < a_add:
                adj[i, j] = True
                adj[j, i] = True
                deg[i] += 1
                deg[j] += 1


def sample_constrained(model, n_draws, seed=None, initial=None):
    """Retained draws from the degree-capped Metropolis chain.

    Each step picks a uniform dyad.  Additions that would push an endpoint
    past ``d_max`` are rejected; otherwise additions are accepted with
    probability ``min(1, p/(1-p))`` and deletions with ``min(1, (1-p)/p)``.
    Rejected steps count toward thinning.  The chain starts from the empty
    graph unless ``initial`` is given.
    """
    rng = make_rng(seed)
    n = model.n_vertices
    if initial is None:
        adj = np.zeros((n, n), dtype=np.bool_)
    else:
        adj = initial.adjacency()
    deg = adj.sum(axis=1).astype(np.int64)
    if deg.max(initial=0) > model.d_max:
        raise ValueError("initial graph violates the degree cap")
    odds = model.tie_prob / (1.0 - model.tie_prob)
    _metropolis(rng, adj, deg, model.burnin, model.d_max, odds)
    draws = []
    for k in range(n_draws):
        if k:
            _metropolis(rng, adj, deg, model.thinning, model.d_max, odds)
        draws.append(Graph.from_adjacency(adj))
    return draws
