"""Simulation and equilibrium theory for the contact formation network process.

Vertices move among foci, form ties only with co-focal alters and lose ties
at a constant rate.  Under fast migration the cross-sectional graph is a
Bernoulli graph whose edge logit splits into ``log(r_f P / r_ell)`` plus the
sparse reference weight ``-log N``.
"""

from .analytic import PopulationParams, RateParams, SpatialParams
from .ctmc import SimConfig, resolve_foci, run, simulate, step, total_rates
from .graph_state import DynamicState, new_state
from .graph_stats import Graph, GraphSummary, count_triangles, summarize
from .static_samplers import (
    ConstrainedModel,
    sample_bernoulli,
    sample_constrained,
    sample_krivitsky,
)

__version__ = "0.1.0"
