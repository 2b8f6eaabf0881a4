"""Kernels on balls, and what happens as the balls shrink.

White noise only sees overlap, so two small balls a unit apart are
uncorrelated. The free field has long-range correlations, and as the radius
goes to zero its kernel approaches the Yukawa Green function.
"""
import math

from ballfield import Ball, FreeField, White, eval_kernel, free_green

x, y = (0.0, 0.0, 0.0), (1.0, 0.0, 0.0)
limit = free_green(3, 1.0)
print(f"Green function at distance 1: {limit:.10f}  (= e^-1 / 4 pi = {math.exp(-1) / (4 * math.pi):.10f})")
print()
print("     r      white          free        free - limit")
for k in range(1, 7):
    r = 2.0**-k
    w = eval_kernel(White(), Ball(x, r), Ball(y, r))
    f = eval_kernel(FreeField(), Ball(x, r), Ball(y, r))
    print(f"{r:8.5f}  {w:8.3g}  {f:.10f}  {f - limit:+.3e}")

# the error shrinks like r^2, as a Taylor expansion of the mean-value factor suggests
