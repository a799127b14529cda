"""
Error bounds as a function of resolution
========================================

Each bound is exp(-n f(OPT)). Linear values underflow long before n reaches
a megapixel, so the tables are produced in log space.
"""

import numpy as np

from detlim.bounds import GanSpec, KINDS, log_bound

specs = {
    "kl": GanSpec("kl", 0.01, p_g_star=0.1),
    "tv": GanSpec("tv", 0.05),
    "js": GanSpec("js", 0.01),
    "wasserstein": GanSpec("wasserstein", 0.05, diam=1.0),
}
ns = [10**2, 10**4, 10**6]

print(f"{'kind':<12}{'regime':<11}{'test':<7}" + "".join(f"n={n:<12}" for n in ns))
for kind in KINDS:
    for regime in ("general", "euclidean"):
        for test in ("np", "bayes"):
            row = [log_bound(specs[kind], n, regime, test) for n in ns]
            print(f"{kind:<12}{regime:<11}{test:<7}" + "".join(f"{v:<14.4g}" for v in row))

# In the low-error regime the Bayesian exponent is a quarter of the
# Neyman-Pearson one, whatever the distance.
for kind in KINDS:
    ratio = log_bound(specs[kind], 1000, "euclidean", "np") / log_bound(specs[kind], 1000, "euclidean", "bayes")
    print(f"{kind}: np / bayes exponent = {ratio:.1f}")

# A better generator (smaller OPT) raises every bound towards 1.
opts = np.linspace(0.0, 0.05, 6)
print("\nTV, n = 1000:", [round(float(np.exp(log_bound(GanSpec("tv", o), 1000))), 6) for o in opts])
