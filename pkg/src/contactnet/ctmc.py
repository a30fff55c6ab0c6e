"""Exact (Gillespie direct-method) simulation of the contact formation model.

Three event families drive the chain:

* formation: each non-adjacent co-focal pair gains an edge at rate ``r_f``;
* dissolution: each edge disappears at rate ``r_ell``;
* migration: each vertex moves at rate ``r_m``, to a focus drawn uniformly
  from all foci (``uniform-all``, a self-move is a no-op) or from the other
  ``M - 1`` foci (``exclude-current``).
"""

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _kernel as K
from ._rng import make_rng
from .analytic import RateParams, mean_degree_fast_limit
from .graph_state import DynamicState, new_state
from .graph_stats import Graph, summarize
from .static_samplers import sample_bernoulli

__all__ = [
    "SimConfig",
    "Trajectory",
    "StalledProcessError",
    "FORM",
    "DISSOLVE",
    "MIGRATE",
    "MIGRATION_MODES",
    "INITIAL_GRAPH_RULES",
    "total_rates",
    "step",
    "simulate",
    "run",
    "resolve_foci",
    "foci_weight",
]

FORM, DISSOLVE, MIGRATE = K.FORM, K.DISSOLVE, K.MIGRATE
EVENT_NAMES = {FORM: "form", DISSOLVE: "dissolve", MIGRATE: "migrate"}
MIGRATION_MODES = ("uniform-all", "exclude-current")
INITIAL_GRAPH_RULES = ("empty", "bernoulli", "explicit")


class StalledProcessError(RuntimeError):
    """Raised when every event hazard is zero, so no event can ever occur."""


@dataclass
class SimConfig:
    """One simulation run.

    Exactly one of ``n_foci`` (M) and ``expected_local_pop`` (P) is given.
    With P, M is resolved per run by :func:`resolve_foci`.  With the
    ``explicit`` initial-graph rule, ``initial_edges`` (0-based pairs) and
    optionally ``initial_foci`` (0-based) supply the starting state.
    """

    n_vertices: int
    rates: RateParams
    n_foci: int | None = None
    expected_local_pop: float | None = None
    horizon: float = 25.0
    migration_mode: str = "uniform-all"
    initial_graph_rule: str = "bernoulli"
    seed: int = 0
    initial_edges: list | None = field(default=None, repr=False)
    initial_foci: list | None = field(default=None, repr=False)

    def __post_init__(self):
        if isinstance(self.rates, dict):
            self.rates = RateParams(**self.rates)
        self.validate()

    def validate(self):
        n = self.n_vertices
        if int(n) != n or n < 1:
            raise ValueError(f"n_vertices must be a positive integer, got {n}")
        if (self.n_foci is None) == (self.expected_local_pop is None):
            raise ValueError("give exactly one of n_foci (M) and expected_local_pop (P)")
        if self.n_foci is not None and (int(self.n_foci) != self.n_foci or self.n_foci < 1):
            raise ValueError(f"n_foci must be a positive integer, got {self.n_foci}")
        if self.expected_local_pop is not None and not 1 <= self.expected_local_pop <= n:
            raise ValueError(f"expected_local_pop must lie in [1, N={n}], got {self.expected_local_pop}")
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be finite and >= 0, got {self.horizon}")
        if self.migration_mode not in MIGRATION_MODES:
            raise ValueError(f"migration_mode must be one of {MIGRATION_MODES}")
        if self.initial_graph_rule not in INITIAL_GRAPH_RULES:
            raise ValueError(f"initial_graph_rule must be one of {INITIAL_GRAPH_RULES}")
        if self.initial_graph_rule == "explicit" and self.initial_edges is None:
            raise ValueError("explicit initial graph rule needs initial_edges")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def design_local_pop(self):
        if self.expected_local_pop is not None:
            return float(self.expected_local_pop)
        return self.n_vertices / self.n_foci

    def to_dict(self):
        d = asdict(self)
        d["rates"] = asdict(self.rates)
        if d["initial_edges"] is None:
            del d["initial_edges"]
        if d["initial_foci"] is None:
            del d["initial_foci"]
        else:
            # user-facing focus ids are 1-based
            d["initial_foci"] = [int(k) + 1 for k in d["initial_foci"]]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("initial_foci") is not None:
            d["initial_foci"] = [int(k) - 1 for k in d["initial_foci"]]
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


def foci_weight(n_vertices, local_pop):
    """Probability of ``floor(N/P)`` in the randomised focus-count rule.

    Solves ``w N/M_lo + (1 - w) N/M_hi = P`` so the mean local population
    equals P.  Returns ``(M_lo, M_hi, w)``; ``M_lo == M_hi`` when N/P is integral.
    """
    n, p = n_vertices, float(local_pop)
    if not 1 <= p <= n:
        raise ValueError(f"P must lie in [1, N={n}], got {p}")
    ratio = n / p
    lo, hi = math.floor(ratio), math.ceil(ratio)
    if lo == hi or abs(ratio - round(ratio)) < 1e-12:
        m = round(ratio)
        return m, m, 1.0
    w = (p - n / hi) / (n / lo - n / hi)
    return lo, hi, w


def resolve_foci(n_vertices, local_pop, rng):
    lo, hi, w = foci_weight(n_vertices, local_pop)
    if lo == hi:
        return lo
    return lo if make_rng(rng).random() < w else hi


def total_rates(state, rates, migration_mode="uniform-all"):
    """``(R_form, R_diss, R_mig)`` for the current state.

    Both migration modes give every vertex total hazard ``r_m``; they differ
    only in the destination law.
    """
    if migration_mode not in MIGRATION_MODES:
        raise ValueError(f"unknown migration mode {migration_mode!r}")
    return (
        rates.r_f * state.total_at_risk,
        rates.r_ell * state.total_edges,
        rates.r_m * state.n_vertices,
    )


class _EventLog:
    def __init__(self, enabled, capacity=1024):
        self.enabled = enabled
        cap = capacity if enabled else 1
        self.t = np.empty(cap, dtype=np.float64)
        self.kind = np.empty(cap, dtype=np.int64)
        self.a = np.empty(cap, dtype=np.int64)
        self.b = np.empty(cap, dtype=np.int64)
        self.n = np.zeros(1, dtype=np.int64)

    def grow(self):
        if self.enabled and self.n[0] >= len(self.t):
            for name in ("t", "kind", "a", "b"):
                old = getattr(self, name)
                new = np.empty(2 * len(old), dtype=old.dtype)
                new[: len(old)] = old
                setattr(self, name, new)

    def arrays(self):
        k = int(self.n[0])
        return self.t[:k].copy(), self.kind[:k].copy(), self.a[:k].copy(), self.b[:k].copy()


def _drive(state, rates, migration_mode, rng, t, horizon, max_events, log):
    """Run the kernel, growing arrays as needed.  Returns ``(status, t, n_events)``."""
    total = 0
    while True:
        state._ensure_capacity()
        log.grow()
        status, t, done, _, _ = state._call(
            K.OP_RUN, rng=rng, rates=(rates.r_f, rates.r_ell, rates.r_m),
            exclude_current=migration_mode == "exclude-current", t=t, horizon=horizon,
            max_events=max_events - total,
            log=(log.t, log.kind, log.a, log.b, log.n) if log.enabled else None,
        )
        total += done
        if status != K.GROW:
            return status, t, total


def step(state, rates, migration_mode, rng):
    """Apply one event in place.  Returns ``(dt, (kind, a, b))``.

    For formation and dissolution ``(a, b)`` is the pair; for migration it is
    ``(vertex, destination focus)``.
    """
    if migration_mode not in MIGRATION_MODES:
        raise ValueError(f"unknown migration mode {migration_mode!r}")
    log = _EventLog(True, capacity=4)
    status, t, _ = _drive(state, rates, migration_mode, make_rng(rng), 0.0, np.inf, 1, log)
    if status == K.STALLED:
        raise StalledProcessError("all event rates are zero")
    times, kinds, a, b = log.arrays()
    return float(t), (int(kinds[0]), int(a[0]), int(b[0]))


@dataclass
class Trajectory:
    """Event log of one run plus its initial and final states."""

    initial: DynamicState
    final: DynamicState
    times: np.ndarray
    kinds: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __len__(self):
        return len(self.times)

    def replay(self):
        """Re-apply the logged events to a copy of the initial state."""
        state = self.initial.copy()
        for kind, a, b in zip(self.kinds, self.a, self.b):
            if kind == FORM:
                state.toggle_edge(int(a), int(b), True)
            elif kind == DISSOLVE:
                state.toggle_edge(int(a), int(b), False)
            else:
                state.migrate(int(a), int(b))
        return state

    def iter_records(self):
        """Line-delimited JSON records; foci are written 1-based."""
        yield {
            "kind": "init",
            "n_vertices": self.initial.n_vertices,
            "n_foci": self.initial.n_foci,
            "foci": [int(k) + 1 for k in self.initial.focus_of],
            "edges": self.initial.edge_array().tolist(),
        }
        for t, kind, a, b in zip(self.times, self.kinds, self.a, self.b):
            rec = {"t": float(t), "kind": EVENT_NAMES[int(kind)]}
            if kind == MIGRATE:
                rec.update(v=int(a), dest=int(b) + 1)
            else:
                rec.update(u=int(a), v=int(b))
            yield rec

    def dump(self, path):
        with open(path, "w") as fh:
            for rec in self.iter_records():
                fh.write(json.dumps(rec) + "\n")


def initial_state(config, rng):
    """Resolve M, place vertices and seed the graph, consuming ``rng`` in that order."""
    n = config.n_vertices
    if config.n_foci is not None:
        m = int(config.n_foci)
    else:
        m = resolve_foci(n, config.expected_local_pop, rng)
    if config.initial_foci is not None:
        foci = np.asarray(config.initial_foci, dtype=np.int64)
        if len(foci) != n or foci.min() < 0 or foci.max() >= m:
            raise ValueError("initial_foci must give a focus in 1..M for each vertex")
    else:
        foci = rng.integers(0, m, size=n)

    rule = config.initial_graph_rule
    if rule == "empty":
        graph = Graph(n, np.empty((0, 2), dtype=np.int64))
    elif rule == "bernoulli":
        if n > 1:
            d = mean_degree_fast_limit(config.rates, config.design_local_pop)
            p = min(1.0, d / (n - 1))
        else:
            p = 0.0
        graph = sample_bernoulli(n, p, rng)
    else:
        graph = Graph.from_edges(n, config.initial_edges)
    return new_state(n, m, foci, graph)


def simulate(config, record=False):
    """Simulate one trajectory to the horizon.

    Returns ``(final_state, trajectory_or_None)``.  A process whose hazards
    all vanish simply stays put until the horizon.
    """
    rng = make_rng(config.seed)
    state = initial_state(config, rng)
    start = state.copy() if record else None
    log = _EventLog(record)
    _drive(state, config.rates, config.migration_mode, rng, 0.0, config.horizon,
           np.iinfo(np.int64).max, log)
    traj = None
    if record:
        traj = Trajectory(start, state, *log.arrays())
    return state, traj


def run(config, d_max=None, record=False):
    """Simulate and summarise the final graph.

    Returns ``(summary, n_foci, trajectory_or_None)``; ``n_foci`` is the
    (possibly randomly resolved) focus count used by the run.
    """
    state, traj = simulate(config, record=record)
    return summarize(state.to_graph(), d_max=d_max), state.n_foci, traj
