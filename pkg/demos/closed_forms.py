"""
Closed-form quantities of the contact formation model
=====================================================

Rates are in units of the formation rate (r_f = 1).  Dissolution r_ell = 5
is the reference setting used throughout.
"""

import math

from contactnet.analytic import (
    MEASURE_CONVENTIONS,
    PopulationParams,
    RateParams,
    SpatialParams,
    mean_degree_fast,
    mean_degree_fast_limit,
    psi_decomposition,
    slow_fast_ratio,
    slow_mean_degree,
    spatial_psi,
)

rates = RateParams(1.0, 5.0)

# With fast migration the mean degree settles near r_f P / r_ell for every N.
print("fast-mixing mean degree")
print(f"{'N':>6} {'P=5':>9} {'P=10':>9}")
for n in (50, 100, 200, 400, 800, 1600):
    row = [mean_degree_fast(rates, PopulationParams.from_local_pop(n, p)) for p in (5, 10)]
    print(f"{n:6d} {row[0]:9.5f} {row[1]:9.5f}")
print("limits:", [mean_degree_fast_limit(rates, p) for p in (5, 10)])

# Without migration each focus equilibrates on its own; the ratio to the fast
# limit depends only on the two tie rates.
pop = PopulationParams(500, 50)
print(f"\nN=500, P=10: slow {slow_mean_degree(rates, pop):.4f}, "
      f"fast {mean_degree_fast(rates, pop):.5f}, ratio limit {slow_fast_ratio(rates):.4f}")

# The sparse reference-measure parameterisation: a size-free tie parameter
# plus the -log N offset.
theta, log_measure = psi_decomposition(rates, PopulationParams(1000, 100))
print(f"\ntheta_e = {theta:.4f} (ln 2 = {math.log(2):.4f}), offset {log_measure:.4f}")

# Splitting the same total between tie parameter and reference measure three
# ways leaves the total unchanged.
space = SpatialParams(100.0, 1.0)
for convention in MEASURE_CONVENTIONS:
    theta, log_measure = spatial_psi(rates, space, convention)
    print(f"{convention:>15}: theta {theta:8.4f} + log h {log_measure:8.4f} "
          f"= {theta + log_measure:.6f}")
