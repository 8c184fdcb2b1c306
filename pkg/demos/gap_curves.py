"""
Gap curves and their closed-form sandwich
=========================================

Iterate the geometric transform from the seed 2x(1-x) and compare each
iterate against the two closed-form parabolas that bracket it.
"""

import numpy as np

from martgap import bound_curve, gap_curves

curves = gap_curves(16)

# the midpoint value shrinks roughly like 1/sqrt(n)
for n in (1, 2, 3, 4, 8, 16):
    c = curves[n - 1]
    low, high = bound_curve("L", n)(0.5), bound_curve("U", n)(0.5)
    print(f"n={n:2d}  L={low:.6f}  C={c(0.5):.6f}  U={high:.6f}  sqrt(n)*C={np.sqrt(n) * c(0.5):.4f}")

# each iterate stays symmetric and concave, so it is a legal input to the next transform
c = curves[-1]
print("symmetric:", c.symmetric, " concave:", c.is_concave)

# plot-ready output, one column per depth
x = np.linspace(0, 1, 11)
table = np.column_stack([x] + [curves[n - 1](x) for n in (1, 4, 16)])
print("\n   x      C1       C4       C16")
for row in table:
    print("  ".join(f"{v:.4f}" for v in row))
