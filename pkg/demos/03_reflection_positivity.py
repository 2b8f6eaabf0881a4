"""Reflection positivity three ways.

Balls sit in the future half-space t > 0. Their mirror images under the
time reflection theta sit in the past. The pairing matrix between the two
must be positive semidefinite, for the kernel itself, for the Gaussian
characteristic functions, and for nonlinear functions of the field.
"""
import numpy as np

from ballfield import (FreeField, Functional, Transform, apply_transform, random_balls, reflected_configuration,
                       rp_gaussian_check, rp_kernel_check, rp_monte_carlo_check, sample)

rng = np.random.default_rng(77)
balls = random_balls(6, 3, rng, box=(0, 2), radius_range=(0.1, 0.5), positive_time=True)
fs = [Functional.single(i) for i in range(len(balls))]

print(rp_kernel_check(FreeField(), balls).to_dict())
print(rp_gaussian_check(FreeField(), fs, balls).to_dict())

batch = sample(FreeField(), reflected_configuration(balls), 100_000, seed=5)
for phi in (Transform.identity(), Transform.tanh(), Transform.cube()):
    rep = rp_monte_carlo_check(apply_transform(phi, batch), fs, n_boot=300)
    print(f"{phi.kind:>8}: min eigenvalue {rep.min_eigenvalue:+.2e}, allowed down to {-rep.tolerance:.2e}")
