"""Sampling the field at a handful of balls and checking the second moments."""
import numpy as np

from ballfield import White, empirical_covariance, kernel_matrix, random_balls, sample
from ballfield.gaussian import clt_bound

rng = np.random.default_rng(3)
balls = random_balls(8, 2, rng, box=(0, 1), radius_range=(0.1, 0.5))
cov = kernel_matrix(White(), balls).entries

batch = sample(White(), balls, 100_000, seed=1)
emp = empirical_covariance(batch).entries
ratio = np.abs(emp - cov) / clt_bound(cov, batch.n_samples)
print(f"{batch.n_samples} draws at {len(balls)} balls ({batch.rng_algorithm})")
print(f"largest deviation in units of five standard errors: {ratio.max():.3f}")

# same seed, same numbers; and the first rows do not depend on how many we ask for
again = sample(White(), balls, 1000, seed=1)
print("prefix reproduces bitwise:", np.array_equal(again.values, batch.values[:1000]))
