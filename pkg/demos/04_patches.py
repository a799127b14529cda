"""
Images made of independent patches
==================================

Eyes, hair and background follow different distributions. The detection
bound for the whole image multiplies the patch bounds, so log-bounds add.
"""

from detlim.bounds import patch_bound, patch_specs
from detlim.distributions import ImageModel, Patch, make_pmf, sample_image, uniform

model = ImageModel((
    Patch(400, make_pmf([0.7, 0.2, 0.1], ["dark", "mid", "light"]),
          make_pmf([0.65, 0.25, 0.1], ["dark", "mid", "light"])),
    Patch(2000, uniform(4, ["h0", "h1", "h2", "h3"]),
          make_pmf([0.3, 0.25, 0.25, 0.2], ["h0", "h1", "h2", "h3"])),
    Patch(6000, make_pmf([0.5, 0.5], ["sky", "wall"]), make_pmf([0.52, 0.48], ["sky", "wall"])),
), large_m_declared=True)

specs = patch_specs(model.patches, "tv")
for (m, spec), name in zip(specs, ("eyes", "hair", "background")):
    print(f"{name:<11} m={m:<5} TV={spec.opt:.4f}")

for test in ("np", "bayes"):
    total = patch_bound(specs, "general", test)
    print(f"{test:>5}: log-bound {total.log_bound:.3f}  bound {total.bound:.3e}")

fake = sample_image(model, "fake", seed=3)
print("\nfirst eye pixels of a fake:", fake.labels()[:8])
