"""
Watching error exponents emerge
===============================

Simulate the optimal detectors and compare the decay of their errors with
the KL divergence (Neyman-Pearson) and the Chernoff information (Bayes).
Miss probabilities here fall below 1e-12, which is only reachable with the
tilted importance sampler the harness uses by default.
"""

import math

from detlim import bernoulli
from detlim.divergence import chernoff_information, kl
from detlim.hyptest import TestConfig, exact_error_small_n, exponent_fit, np_test

p, q = bernoulli(0.5), bernoulli(0.25)
d, c = kl(p, q), chernoff_information(p, q).value
grid = [50, 100, 150, 200]

# With the false-alarm budget at one half the slope settles near D already.
base = TestConfig(p, q, grid[0], alpha=0.5, trials=10**5, seed=7)
fits = exponent_fit(base, grid)
print(f"NP slope {fits['np'].slope:.4f}   D = {d:.4f}")
print(f"Bayes slope {fits['bayes'].slope:.4f}   C = {c:.4f}")

# At a 5% budget the finite-n exponent is visibly below D; the gap closes
# only like 1/sqrt(n).
for n in (50, 200, 800):
    est = np_test(TestConfig(p, q, n, alpha=0.05, trials=10**5, seed=1))
    print(f"n={n:4d}  -ln(beta)/n = {-math.log(est.beta_hat) / n:.4f}  ({est.method})")

# For tiny n the error can be computed by enumerating every image.
exact = exact_error_small_n(bernoulli(0.1), bernoulli(0.9), 10)
print(f"\nexact Bayes error, n=10: {exact.pe:.4e}")
