"""Covering numbers and the entropy integral for white noise on a compact set."""
import numpy as np

from ballfield import White, ball_grid, entropy_integral, entropy_refinement, pseudo_metric_table
from ballfield.continuity import farthest_point_radii, covering_numbers

grid = ball_grid((0, 0), (1, 1), 20, [0.25, 0.3125, 0.375, 0.4375, 0.5])
dist = pseudo_metric_table(White(), grid)
_, radii = farthest_point_radii(dist)
diam = dist.max()
for frac in (1.0, 0.5, 0.25, 0.1, 0.05):
    print(f"N({frac:4.2f} diam) = {covering_numbers(radii, frac * diam)[0]}")

rep = entropy_integral(White(), grid, diam * 0.5 ** np.arange(12), dist=dist)
print(f"J down to {rep.lower_limit:.4g}: {rep.J:.4f} (trapezoid on the schedule: {rep.J_trapezoid:.4f})")

grids = [ball_grid((0, 0), (1, 1), m, np.linspace(0.25, 0.5, k).tolist()) for m, k in ((5, 3), (9, 5), (17, 9))]
values, steps = entropy_refinement(White(), grids, 0.05)
print("J under refinement:", np.round(values, 4), "relative steps:", np.round(steps, 4))
