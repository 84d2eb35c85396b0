"""
Geometry of implicit confidence sets
====================================

A self-normalized set is only known through its membership oracle. Ray
probing gives lower bounds on its diameters, and a Hausdorff estimate
measures how close the rotated set is to the oracle Wald rectangle.
"""

import numpy as np

from selfnorm import DgpSpec
from selfnorm.geometry import Rect, diameter_estimate, hausdorff_rect_rect
from selfnorm.simharness import run_hausdorff_similarity

# A known shape first: the rectangle with half-widths (1, 2, 0.5).
half = np.array([1.0, 2.0, 0.5])
g = diameter_estimate(Rect(np.zeros(3), half), np.zeros(3), directions=20)
print(f"rectangle: diam2={g.diam2:.6f} (exact {2 * np.linalg.norm(half):.6f}), diam_inf={g.diam_inf:.6f}")
print("exact rectangle Hausdorff to its double:", hausdorff_rect_rect(half, 2 * half))

# Monte Carlo: the rotated set approaches the oracle Wald rectangle as n grows.
spec = DgpSpec(n_total=10, p=5, noise="heteroskedastic", gamma=(0.5, 0, 0, 0, 0), misspec="quadratic")
rows = run_hausdorff_similarity(spec, [200, 800, 3200], alpha=0.10, reps=20, B="n", base_seed=7)
for r in rows:
    print(f"n={r['n']:5d}  median d2/diam2(wald)={r['ratio']:.4f}  failures={r['failures']}")
