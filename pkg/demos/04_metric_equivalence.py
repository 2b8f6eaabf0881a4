"""Comparing canonical pseudo-metrics on nested grids.

The ratio d_A / d_white is trapped in a fixed interval only when the
operator A is bounded below. The free-field operator is not: for nearby
balls d_free shrinks like the shift while d_white shrinks like its square
root, so the lower end of the ratio keeps falling as the grid is refined.
Adding a constant floor to the multiplier restores the equivalence.
"""
from ballfield import DEFAULT_QUADRATURE, FreeField, White, shifted_free_field
from ballfield.cli import equivalence_study

sec = {"lower": [0.0, 0.0], "upper": [1.0, 1.0], "levels": [[3, 2], [5, 3], [9, 5]],
       "radius_range": [0.1, 2.0]}
for label, spec in (("free", FreeField()), ("0.5 + free", shifted_free_field(1.0, 0.5))):
    rows, drift = equivalence_study(spec, White(), sec, DEFAULT_QUADRATURE)
    print(label)
    for n, lo, hi in rows:
        print(f"   {n:4d} balls  ratio in [{lo:.4f}, {hi:.4f}]")
    print(f"   relative drift of the bounds: {drift:.3f}")
