"""
Degree caps in a static model
=============================

Independent ties with probability 0.12, conditioned on no degree above 12.
Small graphs look Bernoulli; large ones pile up at the cap.  Short chains
(chain_scale 0.01) keep this to seconds.
"""

from contactnet.analytic import saturation_fixed_point
from contactnet.experiments import ExperimentDesign, run_design

design = ExperimentDesign("sat", (25, 50, 100, 200, 350, 500), replications=40,
                          kind="saturation", statistic="saturated_fraction",
                          chain_scale=0.01, master_seed=4)
print(f"{'N':>5} {'mean deg':>9} {'0.12(N-1)':>10} {'saturated':>10} {'bound':>8}")
for cell in run_design(design):
    s = cell.stats
    bound = 1 - saturation_fixed_point(0.12, 12, cell.N)
    print(f"{cell.N:5d} {s['mean_degree'].mean:9.3f} {0.12 * (cell.N - 1):10.2f} "
          f"{s['saturated_fraction'].mean:10.3f} {bound:8.3f}")
