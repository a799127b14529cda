"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import json
import math
import time

import numpy as np
import pytest

from detlim.bounds import KINDS, GanSpec, check_inequalities, log_bound, patch_bound
from detlim.cli import main
from detlim.distributions import bernoulli, make_pmf, make_space, random_pmf
from detlim.divergence import (
    chernoff_information,
    chernoff_tv_lower_bound,
    chi_squared_weighted,
    euclidean_chernoff_approx,
    kl,
    tv,
)
from detlim.epidemic import (
    containment_requirement,
    crossing_rate,
    f_of_opt,
    gen_er,
    mean_field_threshold,
    outbreak_sweep,
)
from detlim.hyptest import TestConfig, bayes_test, exact_error_small_n, exponent_fit

SEED = 20240611
N_GRID = [50, 100, 150, 200]
VARIANTS = [(r, t) for r in ("general", "euclidean") for t in ("np", "bayes")]


def spec_for(kind, opt):
    extra = {"kl": {"p_g_star": 0.2}, "wasserstein": {"diam": 2.0}}.get(kind, {})
    return GanSpec(kind, float(opt), **extra)


def test_inequality_suite(criterion):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = {}
    for _ in range(10_000):
        k = int(rng.integers(2, 17))
        p, q = random_pmf(rng, k), random_pmf(rng, k)
        space = make_space(np.sort(rng.uniform(-10, 10, k)))
        for check in check_inequalities(p, q, space, chernoff=False).checks():
            worst[check.name] = min(worst.get(check.name, math.inf), check.slack)
    elapsed = time.perf_counter() - start
    ok = len(worst) == 4 and min(worst.values()) >= -1e-12 and elapsed < 10
    summary = ", ".join(f"{k}={v:.3g}" for k, v in sorted(worst.items()))
    criterion(1, f"min slacks {summary}; {elapsed:.1f}s", ok)


def test_chernoff_lower_bound(criterion):
    rng = np.random.default_rng(SEED + 1)
    worst = math.inf
    for _ in range(10_000):
        k = int(rng.integers(2, 17))
        p, q = random_pmf(rng, k), random_pmf(rng, k)
        worst = min(worst, chernoff_information(p, q).value - chernoff_tv_lower_bound(p, q))
    p, q = bernoulli(0.1), bernoulli(0.9)
    c, lower = chernoff_information(p, q).value, chernoff_tv_lower_bound(p, q)
    ok = (worst >= -1e-12 and abs(c - lower) <= 1e-9
          and abs(c - 0.510826) <= 5e-7 and abs(lower - 0.510826) <= 5e-7)
    criterion(2, f"min slack {worst:.3g}; Bern(0.1)/Bern(0.9): C={c:.6f}, bound={lower:.6f}", ok)


def test_chernoff_stein(criterion):
    # alpha = 0.5 puts the threshold at the median, which cancels the sqrt(n)
    # correction that otherwise dominates the slope at these n
    d = kl(bernoulli(0.5), bernoulli(0.25))
    start = time.perf_counter()
    cfg = TestConfig(bernoulli(0.5), bernoulli(0.25), N_GRID[0], alpha=0.5, trials=10**5, seed=SEED)
    slope = exponent_fit(cfg, N_GRID, tests=("np",))["np"].slope
    elapsed = time.perf_counter() - start
    ok = abs(slope / d - 1) <= 0.15 and elapsed < 120
    criterion(3, f"NP slope {slope:.5f} vs D={d:.6f} (ratio {slope / d:.3f}); {elapsed:.1f}s", ok)


def test_bayes_exponent(criterion):
    start = time.perf_counter()
    ratios = []
    for a, b in [(0.5, 0.25), (0.2, 0.5), (0.1, 0.4)]:
        p, q = bernoulli(a), bernoulli(b)
        cfg = TestConfig(p, q, N_GRID[0], trials=10**5, seed=SEED)
        slope = exponent_fit(cfg, N_GRID, tests=("bayes",))["bayes"].slope
        ratios.append(slope / chernoff_information(p, q).value)
    rng = np.random.default_rng(SEED + 4)
    agree = 0
    for i in range(50):
        k = int(rng.integers(2, 5))
        n = int(rng.integers(1, {2: 13, 3: 11, 4: 9}[k]))
        p, q = random_pmf(rng, k, floor=0.1), random_pmf(rng, k, floor=0.1)
        pi0 = float(rng.uniform(0.2, 0.8))
        exact = exact_error_small_n(p, q, n, priors=(pi0, 1 - pi0)).pe
        est = bayes_test(TestConfig(p, q, n, priors=(pi0, 1 - pi0), trials=10**4, seed=SEED + i))
        agree += abs(est.pe_hat - exact) <= 3 * est.wilson_halfwidth + 1e-12
    elapsed = time.perf_counter() - start
    ok = all(abs(r - 1) <= 0.15 for r in ratios) and agree == 50 and elapsed < 120
    criterion(4, f"slope/C = {', '.join(f'{r:.3f}' for r in ratios)}; "
                 f"exact agreement {agree}/50; {elapsed:.1f}s", ok)


def _close_pair(rng, k, target_tv):
    # both endpoints keep every mass >= 1/(2k), so the pair is in a genuine
    # neighbourhood and not near the simplex boundary
    p, r = random_pmf(rng, k, floor=0.5), random_pmf(rng, k, floor=0.5)
    t = min(target_tv / tv(p, r), 1.0)
    return p, make_pmf((1 - t) * p.probs + t * r.probs)


def test_euclidean_approximation(criterion):
    rng = np.random.default_rng(SEED + 5)
    ratios = []
    for _ in range(100):
        p, q = _close_pair(rng, int(rng.integers(2, 17)), 1e-3)
        # weighted by the nearby distribution itself and by the midpoint default
        ratios.append(kl(p, q) / (0.5 * chi_squared_weighted(p, q, q)))
        ratios.append(kl(p, q) / (0.5 * chi_squared_weighted(p, q)))
    errors = []
    for _ in range(100):
        p, q = _close_pair(rng, int(rng.integers(2, 17)), float(rng.uniform(1e-4, 0.0099)))
        exact = chernoff_information(p, q).value
        errors.append(abs(euclidean_chernoff_approx(p, q) / exact - 1))
    ok = 0.99 <= min(ratios) and max(ratios) <= 1.01 and max(errors) <= 0.05
    criterion(5, f"kl/(chi2/2) in [{min(ratios):.4f}, {max(ratios):.4f}]; "
                 f"max Chernoff approx error {max(errors):.2%}", ok)


def test_structural_laws(criterion):
    consistent = four = monotone = True
    ns = np.unique(np.geomspace(1, 10**6, 50).astype(int))
    for kind in KINDS:
        top = {"kl": 2.0, "tv": 1.0, "js": math.log(2), "wasserstein": 2.0}[kind]
        opts = np.linspace(0, top, 50)
        for opt in opts:
            spec = spec_for(kind, opt)
            for n in ns:
                n = int(n)
                if kind != "js":
                    consistent &= log_bound(spec, n, "euclidean", "np") == log_bound(spec, n, "general", "np")
                if opt > 0:
                    np_lb = log_bound(spec, n, "euclidean", "np")
                    four &= math.isclose(np_lb, 4 * log_bound(spec, n, "euclidean", "bayes"), rel_tol=1e-14)
        for regime, test in VARIANTS:
            grid = np.array([[log_bound(spec_for(kind, o), int(n), regime, test) for n in ns] for o in opts])
            # a row that is -inf throughout is a bound of exactly zero, e.g. TV at OPT = 1
            rows = grid[1:][np.isfinite(grid[1:]).any(axis=1)]
            monotone &= bool(np.all(rows[:, 1:] < rows[:, :-1]) and np.all(grid[1:] <= grid[:-1]))
    criterion(6, f"regime consistency {consistent}, factor of four {four}, "
                 f"monotone on 50x50 grids {monotone}", consistent and four and monotone)


def test_patch_generalization(criterion):
    rng = np.random.default_rng(SEED + 7)
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 9))
        regime, test = VARIANTS[int(rng.integers(4))]
        specs = []
        for _ in range(k):
            kind = KINDS[int(rng.integers(4))]
            top = {"kl": 1.0, "tv": 0.99, "js": 0.69, "wasserstein": 1.9}[kind]
            specs.append((int(rng.integers(1, 10**6)), spec_for(kind, rng.uniform(0, top))))
        single = [log_bound(s, m, regime, test) for m, s in specs]
        product = float(np.prod([math.exp(x) for x in single]))
        combined = patch_bound(specs, regime, test)
        worst = max(worst, abs(combined.log_bound - math.fsum(single)) / max(1.0, abs(combined.log_bound)))
        if product > 0:
            worst = max(worst, abs(combined.bound - product) / product)
    criterion(7, f"max relative gap to product of single-patch bounds {worst:.2e}", worst <= 1e-12)


@pytest.mark.slow
def test_epidemic_threshold(criterion):
    start = time.perf_counter()
    g = gen_er(10_000, 0.001, SEED)
    lam_c = mean_field_threshold(g)
    curve = outbreak_sweep(g, np.linspace(0.02, 0.2, 10), 1.0, 200, seed=SEED)
    cross = crossing_rate(curve)
    elapsed = time.perf_counter() - start
    need = containment_requirement(10**6, 0.05, 0.1)
    increasing = True
    for kind in KINDS:
        top = {"kl": 2.0, "tv": 0.999, "js": 0.69, "wasserstein": 1.99}[kind]
        for regime, test in VARIANTS:
            f = [f_of_opt(spec_for(kind, o), regime, test) for o in np.linspace(0, top, 100)]
            increasing &= bool(np.all(np.diff(f) > 0))
    ok = (cross is not None and 0.5 * lam_c <= cross <= 2 * lam_c
          and abs(need - 6.9315e-7) <= 1e-11 and increasing and elapsed < 300)
    criterion(8, f"crossing {cross} vs lambda_c {lam_c:.4f}; requirement {need:.6e}; "
                 f"f increasing for 8 variants {increasing}; sweep {elapsed:.1f}s", ok)


def test_cli_determinism(criterion, tmp_path, capsys):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)

    p, q = write("p.json", bernoulli(0.5).to_dict()), write("q.json", bernoulli(0.25).to_dict())
    space = write("s.json", make_space([0, 1], ["0", "1"]).to_dict())
    hyp = write("h.json", {"p_legit": bernoulli(0.5).to_dict(), "p_fake": bernoulli(0.25).to_dict(),
                           "n_grid": [20, 40, 60, 80], "trials": 5000, "seed": 1})
    epi = write("e.json", {"graph": {"kind": "ba", "nodes": 500, "attach_m": 2},
                           "beta_grid": [0.05, 0.1, 0.2], "gamma": 0.5, "runs_per_point": 20})
    commands = {
        "divergence": ["divergence", p, q, "--space", space],
        "table": ["table", "--l-kind", "all", "--opt", "0,0.05,0.1", "--n", "10,1000",
                  "--diam", "1", "--pg-star", "0.2"],
        "hyptest-json": ["hyptest", hyp],
        "hyptest-csv": ["hyptest", hyp, "--format", "csv"],
        "epidemic-csv": ["epidemic", epi],
        "epidemic-json": ["epidemic", epi, "--format", "json"],
        "inequalities": ["inequalities", "--pairs", "500"],
    }
    identical = []
    for name, argv in commands.items():
        blobs = []
        for i in range(2):
            out = tmp_path / f"{name}.{i}"
            assert main(argv + ["--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        identical.append(blobs[0] == blobs[1])
    capsys.readouterr()
    criterion(9, f"{sum(identical)}/{len(identical)} commands byte-identical on rerun", all(identical))
