"""
Distances between two pixel distributions
=========================================

Four ways of measuring how far a generated distribution sits from the real
one, plus the Chernoff information that governs Bayesian detection.
"""

import numpy as np

from detlim import bernoulli, make_space
from detlim.bounds import check_inequalities
from detlim.divergence import chernoff_information, divergence_report, tilted

# A binary pixel: legitimate images are fair coins, fakes lean towards 0.
p, q = bernoulli(0.5), bernoulli(0.25)
space = make_space([0.0, 1.0], p.labels)
report = divergence_report(p, q, space)
for name, value in report.to_dict().items():
    print(f"{name:>16}: {value}")

# The Chernoff information is the KL divergence from a tilted mixture to
# either endpoint, at the tilt where both divergences agree.
value, lam = chernoff_information(p, q)
mid = tilted(p, q, lam)
print(f"\nlambda* = {lam:.5f}, tilted pmf = {np.round(mid.probs, 5)}")

# Every inequality that links the four distances holds with room to spare.
for check in check_inequalities(p, q, space).checks():
    print(f"{check.name:>16}: {check.lhs:.6f} <= {check.rhs:.6f}")
