"""Closed-form equilibrium quantities of the contact formation model.

Rates are per unit time: ``r_f`` per at-risk pair, ``r_ell`` per edge and
``r_m`` per vertex.  N is the vertex count, M the number of foci and
``P = N / M`` the expected local population.
"""

import math
from dataclasses import dataclass


__all__ = [
    "RateParams",
    "PopulationParams",
    "SpatialParams",
    "MEASURE_CONVENTIONS",
    "mean_degree_fast",
    "mean_degree_fast_limit",
    "slow_local_density",
    "slow_mean_degree",
    "slow_mean_degree_limit",
    "slow_fast_ratio",
    "coresidence_moments",
    "coresidence_variance_exact",
    "edge_probability_given_coresidence",
    "edge_probability_fast_limit",
    "edge_probability_bound",
    "psi",
    "psi_exact",
    "psi_decomposition",
    "expected_triangles_fast",
    "saturation_bound",
    "saturation_fixed_point",
    "spatial_psi",
]


@dataclass(frozen=True)
class RateParams:
    r_f: float
    r_ell: float
    r_m: float = 0.0

    def __post_init__(self):
        for name in ("r_f", "r_ell", "r_m"):
            x = getattr(self, name)
            if not (math.isfinite(x) and x >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {x}")


@dataclass(frozen=True)
class PopulationParams:
    n_vertices: float
    n_foci: float

    def __post_init__(self):
        if self.n_vertices < 1 or self.n_foci < 1:
            raise ValueError("need N >= 1 and M >= 1")

    @classmethod
    def from_local_pop(cls, n_vertices, local_pop):
        return cls(n_vertices, n_vertices / local_pop)

    @property
    def expected_local_pop(self):
        return self.n_vertices / self.n_foci


@dataclass(frozen=True)
class SpatialParams:
    """System volume V and voxel volume v; population density is N / V.

    Build the hypercube case with :meth:`hypercube`.
    """

    system_volume: float
    voxel_volume: float
    population_density: float = 1.0
    linear_dims: tuple | None = None

    def __post_init__(self):
        if not 0 < self.voxel_volume <= self.system_volume:
            raise ValueError(
                f"need 0 < v <= V, got v={self.voxel_volume}, V={self.system_volume}")
        if self.population_density <= 0:
            raise ValueError("population density must be positive")
        if self.linear_dims is not None:
            big, small, k = self.linear_dims
            if not (math.isclose(big**k, self.system_volume)
                    and math.isclose(small**k, self.voxel_volume)):
                raise ValueError("linear dims inconsistent with volumes")

    @classmethod
    def hypercube(cls, L, l, k, population_density=1.0):
        return cls(float(L) ** k, float(l) ** k, population_density, (L, l, k))


def _check_positive(**kw):
    for name, x in kw.items():
        if not x > 0:
            raise ValueError(f"{name} must be positive, got {x}")


def mean_degree_fast(rates, pop):
    """Equilibrium mean degree under fast mixing at finite N.

    Balances edge loss ``r_ell N d / 2`` against formation
    ``r_f P (N - 1)/2 (1 - d/(N - 1))``.
    """
    n = pop.n_vertices
    if n < 2:
        raise ValueError(f"mean degree needs N >= 2, got {n}")
    _check_positive(r_f=rates.r_f, r_ell=rates.r_ell)
    p = pop.expected_local_pop
    return (n - 1) / n / (rates.r_ell / (rates.r_f * p) + 1.0 / n)


def mean_degree_fast_limit(rates, local_pop):
    """Large-N limit ``r_f P / r_ell`` of :func:`mean_degree_fast`."""
    _check_positive(P=local_pop, r_ell=rates.r_ell)
    return rates.r_f * local_pop / rates.r_ell


def slow_local_density(rates):
    """Within-focus equilibrium density ``r_f / (r_f + r_ell)`` when r_m -> 0."""
    return rates.r_f / (rates.r_f + rates.r_ell)


def slow_mean_degree(rates, pop):
    """Global mean degree in the slow-migration regime, ``delta (N - 1) / M``."""
    return slow_local_density(rates) * (pop.n_vertices - 1) / pop.n_foci


def slow_mean_degree_limit(rates, local_pop):
    return slow_local_density(rates) * local_pop


def slow_fast_ratio(rates):
    """``d_slow / d_fast = r_ell / (r_f + r_ell)`` (meaningful for M > 1)."""
    return rates.r_ell / (rates.r_f + rates.r_ell)


def coresidence_moments(rates, n_foci, t):
    """Mean and variance of accumulated co-residence time over ``t`` units.

    Uses the compound-Poisson representation: a Poisson(2 t r_m / M) number
    of Exp(2 r_m) co-residence intervals, giving mean ``t / M`` and
    variance ``t / (r_m M)``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    _check_positive(r_m=rates.r_m, M=n_foci)
    return t / n_foci, t / (rates.r_m * n_foci)


def coresidence_variance_exact(rates, n_foci, t):
    """Exact variance of co-residence time for a stationary vertex pair.

    The pair's co-location indicator is re-drawn as Bernoulli(1/M) at every
    migration of either vertex (rate ``2 r_m``), so its autocovariance is
    ``q(1 - q) exp(-2 r_m x)`` with ``q = 1/M``.  For ``2 r_m t >> 1`` this
    is ``(M - 1)/M`` times the compound-Poisson value.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    _check_positive(r_m=rates.r_m, M=n_foci)
    q = 1.0 / n_foci
    lam = 2.0 * rates.r_m
    return 2.0 * q * (1 - q) * (t / lam + math.expm1(-lam * t) / lam**2)


def edge_probability_given_coresidence(rates, coresidence):
    """Edge probability at a random time for a pair whose co-residence time
    over the look-back window ``t`` is ``coresidence(t)``.

    Computes ``1 - integral_0^inf r_ell exp(-r_ell t - r_f C_t) dt`` by
    adaptive quadrature.
    """
    from scipy.integrate import quad

    rl, rf = rates.r_ell, rates.r_f
    val, _ = quad(lambda t: rl * math.exp(-rl * t - rf * coresidence(t)), 0, math.inf)
    return 1.0 - val


def edge_probability_fast_limit(rates, n_foci):
    """Edge probability when co-residence is fixed at its fast-mixing value t/M.

    ``(r_f/M) / (r_ell + r_f/M)``.
    """
    _check_positive(r_ell=rates.r_ell, M=n_foci)
    a = rates.r_f / n_foci
    return a / (rates.r_ell + a)


def edge_probability_bound(rates):
    """Upper bound ``1 - r_ell/(r_f + r_ell)`` on the edge probability (C_t <= t)."""
    return 1.0 - rates.r_ell / (rates.r_f + rates.r_ell)


def psi_decomposition(rates, pop):
    """``(theta_e, log_measure_rate)`` with ``psi = theta_e + log_measure_rate``.

    ``theta_e = log(r_f P / r_ell)`` and the per-edge log reference weight is
    ``-log N``, i.e. ``h(g) = N ** -t_e(g)``.
    """
    _check_positive(r_f=rates.r_f, r_ell=rates.r_ell)
    theta = math.log(rates.r_f * pop.expected_local_pop / rates.r_ell)
    return theta, -math.log(pop.n_vertices)


def psi(rates, pop):
    """Sparse-regime edge logit ``log(r_f P / r_ell) - log N``."""
    theta, h = psi_decomposition(rates, pop)
    return theta + h


def psi_exact(rates, pop):
    """Logit of the finite-N fast-mixing density ``d / (N - 1)``."""
    d = mean_degree_fast(rates, pop)
    n = pop.n_vertices
    if d >= n - 1:
        raise ValueError("mean degree reaches N - 1; the logit is undefined")
    dens = d / (n - 1)
    return math.log(dens) - math.log1p(-dens)


def expected_triangles_fast(rates, pop):
    """Bernoulli triangle count ``C(N, 3) p^3`` at the finite-N fast-mixing density."""
    n = pop.n_vertices
    p = mean_degree_fast(rates, pop) / (n - 1)
    return n * (n - 1) * (n - 2) / 6.0 * p**3


def saturation_bound(p, d_max, n_vertices, unsaturated):
    """Chernoff upper bound on the unsaturated fraction.

    ``exp(-(p F (N-1) - d_max + 1)^2 / (2 p F (N-1)))`` when the binomial
    mean ``p F (N-1)`` is at least ``d_max - 1``, else 1.
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if d_max < 1:
        raise ValueError(f"d_max must be >= 1, got {d_max}")
    if not 0 < unsaturated <= 1:
        raise ValueError(f"unsaturated fraction must lie in (0, 1], got {unsaturated}")
    mean = p * unsaturated * (n_vertices - 1)
    gap = mean - d_max + 1
    if gap < 0:
        return 1.0
    return math.exp(-gap * gap / (2.0 * mean))


def saturation_fixed_point(p, d_max, n_vertices, tol=1e-9):
    """Largest F in (0, 1] satisfying ``F <= saturation_bound(F)``.

    Below ``F0 = (d_max - 1)/(p (N - 1))`` the bound is 1; above it the bound
    strictly decreases in F, so ``bound(F) - F`` has a single sign change on
    ``[F0, 1]`` and bisection applies.
    """
    g = lambda f: saturation_bound(p, d_max, n_vertices, f) - f
    if g(1.0) >= 0:
        return 1.0
    lo = (d_max - 1) / (p * (n_vertices - 1))
    lo = min(max(lo, 1e-300), 1.0)
    if g(lo) < 0:
        # d_max == 1 puts F0 at 0 where the bound is already below F
        lo = 1e-300
    hi = 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


MEASURE_CONVENTIONS = ("volume", "relative-voxel", "voxel")


def spatial_psi(rates, spatial, convention="volume"):
    """``(theta_e, log_measure_rate)`` for the voxel (spatial) variant.

    All three conventions give the same total ``log(r_f v / (r_ell V))``;
    they only move factors between the parameter and the reference measure:

    ==============  ====================  ==================
    convention      theta_e               log h per edge
    ==============  ====================  ==================
    volume          log(r_f v / r_ell)    -log V
    relative-voxel  log(r_f / r_ell)      log(v / V)
    voxel           log(r_f/(V r_ell))    log v
    ==============  ====================  ==================
    """
    _check_positive(r_f=rates.r_f, r_ell=rates.r_ell)
    V, v = spatial.system_volume, spatial.voxel_volume
    if spatial.linear_dims is not None:
        big, small, k = spatial.linear_dims
        log_V, log_v = k * math.log(big), k * math.log(small)
    else:
        log_V, log_v = math.log(V), math.log(v)
    log_ratio = math.log(rates.r_f / rates.r_ell)
    if convention == "volume":
        return log_ratio + log_v, -log_V
    if convention == "relative-voxel":
        return log_ratio, log_v - log_V
    if convention == "voxel":
        return log_ratio - log_V, log_v
    raise ValueError(f"convention must be one of {MEASURE_CONVENTIONS}")

