"""
Can detection stop a deepfake from spreading?
=============================================

Sharing is an infection and detection is recovery, so the spreading rate is
beta / (1 - P_e). If that rate stays below the network's epidemic threshold
the fake dies out locally.
"""

import numpy as np

from detlim.bounds import GanSpec
from detlim.epidemic import (
    containment_requirement,
    crossing_rate,
    f_of_opt,
    gen_er,
    mean_field_threshold,
    outbreak_sweep,
    spectral_threshold,
)

g = gen_er(10_000, 0.001, seed=11)
lam_c = mean_field_threshold(g)
print(f"mean degree {g.mean_degree:.2f}; threshold: mean-field {lam_c:.4f}, "
      f"spectral {spectral_threshold(g):.4f}")

# Mean outbreak size against the spreading rate; the jump marks the threshold.
curve = outbreak_sweep(g, np.linspace(0.02, 0.2, 10), gamma=1.0, runs_per_point=100, seed=5)
for point in curve:
    print(f"lambda={point.rate:.3f}  final fraction {point.mean_fraction:.4f} +- {point.stderr:.4f}")
print("first rate above 5%:", crossing_rate(curve))

# What the generator's oracle error has to be for a megapixel image.
n, beta = 10**6, 0.05
need = containment_requirement(n, beta, lam_c)
for opt in (1e-4, 1e-3, 1e-2):
    f = f_of_opt(GanSpec("tv", opt))
    print(f"TV OPT={opt:g}: f={f:.3e}  needs {need:.3e}  containable={f >= need}")
