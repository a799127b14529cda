"""Monte Carlo estimates of Neyman-Pearson and Bayesian (MAP) test errors.

Legitimate pixels follow ``p_legit`` (H0), generated ones ``p_fake`` (H1). The
test statistic is the log-likelihood ratio ``L = sum ln(q(y)/p(y))`` with
``p = p_legit`` and ``q = p_fake``, so large values point to a fake image.

The statistic depends on a sample only through its symbol counts, so trials
draw multinomial count vectors. That has the same law as tallying
``n`` i.i.d. pixels and is much cheaper. Miss probabilities of interest
fall to ``exp(-30)`` and beyond, which plain simulation cannot resolve. The
default ``method="auto"`` therefore samples from the exponentially tilted
distribution ``P_lam ~ p^lam q^(1-lam)`` whose mean statistic sits at the
decision threshold and reweights by the likelihood ratio. This is unbiased,
and for i.i.d. sums the variance stays polynomial in ``n``. ``method="plain"`` runs
direct simulation.

Every batch of at most ``BATCH`` trials gets its own generator derived from
``(seed, stream, batch)``, so results do not depend on batching order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Any, NamedTuple, Sequence

import numpy as np
from scipy import optimize, stats

from .distributions import Pmf, Sample, make_rng
from .divergence import _Tilt, check_alphabet, chernoff_information, kl
from .errors import BothZeroMass, TooLarge, ZeroRateAtGridPoint

BATCH = 1 << 14
#: two-sided 99% normal quantile used by every interval
Z99 = float(stats.norm.ppf(0.995))
TIE_RTOL = 1e-9
MAX_ENUMERATION = 10**7

_STREAM_CAL, _STREAM_H0, _STREAM_H1, _STREAM_TILT = 0, 1, 2, 3


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # keep pytest from collecting this class

    p_legit: Pmf
    p_fake: Pmf
    n: int
    alpha: float = 0.05
    priors: tuple[float, float] = (0.5, 0.5)
    trials: int = 10_000
    seed: int = 0
    method: str = "auto"

    def __post_init__(self):
        check_alphabet(self.p_legit, self.p_fake)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        pi0, pi1 = self.priors
        if pi0 < 0 or pi1 < 0 or abs(pi0 + pi1 - 1) > 1e-12:
            raise ValueError(f"priors must be non-negative and sum to 1, got {self.priors}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.method not in ("auto", "plain", "tilted"):
            raise ValueError(f"unknown method {self.method!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "p_legit": self.p_legit.to_dict(),
            "p_fake": self.p_fake.to_dict(),
            "n": self.n,
            "alpha": self.alpha,
            "priors": list(self.priors),
            "trials": self.trials,
            "seed": self.seed,
            "method": self.method,
        }


@dataclass(frozen=True)
class ErrorEstimate:
    """Estimated error rates of one test.

    ``wilson_halfwidth`` is the 99% half-width of the headline rate
    (``beta_hat`` for Neyman-Pearson, ``pe_hat`` for Bayes). Under importance
    sampling it is the Wilson half-width at the effective sample size
    ``rate (1 - rate) / var``. For direct simulation that is exactly ``trials``.
    """

    test: str
    alpha_hat: float
    beta_hat: float
    pe_hat: float
    wilson_halfwidth: float
    trials: int
    alpha_halfwidth: float = 0.0
    beta_halfwidth: float = 0.0
    threshold: float = 0.0
    randomization: float = 0.0
    method: str = "plain"
    tilt: float | None = None
    flags: tuple[str, ...] = field(default=())

    @property
    def rate(self) -> float:
        return self.beta_hat if self.test == "np" else self.pe_hat

    def to_dict(self) -> dict[str, Any]:
        out = dict(self.__dict__)
        out["flags"] = list(self.flags)
        for key in ("threshold",):
            if math.isinf(out[key]):
                out[key] = "inf" if out[key] > 0 else "-inf"
        return out


def wilson_halfwidth(rate: float, trials: float, z: float = Z99) -> float:
    """Half-width of the Wilson score interval for a proportion."""
    rate = min(max(rate, 0.0), 1.0)
    denom = 1.0 + z * z / trials
    return z / denom * math.sqrt(rate * (1 - rate) / trials + z * z / (4 * trials * trials))


def _halfwidth(rate: float, var: float, trials: int) -> float:
    if var > 0 and 0 < rate < 1:
        n_eff = rate * (1 - rate) / var
    else:
        n_eff = trials
    return wilson_halfwidth(rate, n_eff)


def log_ratio(p: Pmf, q: Pmf) -> np.ndarray:
    """Per-symbol ``ln q/p``; +-inf off a support, 0 where both vanish."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ell = np.log(q.probs) - np.log(p.probs)
    ell[(p.probs == 0) & (q.probs == 0)] = 0.0
    return ell


def llr(sample: Sample, p: Pmf, q: Pmf) -> float:
    """Log-likelihood ratio ``sum ln(q(y_i)/p(y_i))`` of a single-alphabet sample."""
    check_alphabet(p, q)
    counts = np.bincount(sample.symbols, minlength=len(p))
    dead = (p.probs == 0) & (q.probs == 0)
    if np.any(counts[dead] > 0):
        raise BothZeroMass("sample contains a symbol with zero mass under both distributions")
    return float(_llr_counts(counts[None, :], log_ratio(p, q))[0])


def _llr_counts(counts: np.ndarray, ell: np.ndarray) -> np.ndarray:
    finite = np.isfinite(ell)
    out = counts[:, finite] @ ell[finite]
    if not finite.all():
        pos = (counts[:, ell == np.inf] > 0).any(axis=1)
        neg = (counts[:, ell == -np.inf] > 0).any(axis=1)
        out = out.astype(float)
        out[pos] = np.inf
        out[neg] = -np.inf
    return out


def _batches(probs: np.ndarray, n: int, trials: int, seed: int, stream: int):
    for b, start in enumerate(range(0, trials, BATCH)):
        rng = make_rng(seed, stream, b)
        yield rng.multinomial(n, probs, size=min(BATCH, trials - start))


def _tie_tol(t: float) -> float:
    return TIE_RTOL * max(1.0, abs(t)) if math.isfinite(t) else 0.0


def _near(values: np.ndarray, t: float) -> np.ndarray:
    if not math.isfinite(t):
        return values == t
    return np.abs(values - t) <= _tie_tol(t)


def calibrate_threshold(llr_h0: np.ndarray, alpha: float) -> tuple[float, float]:
    """Randomized NP threshold from simulated H0 statistics.

    Returns ``(t, gamma)``: declare H1 when ``L > t`` and with probability
    ``gamma`` when ``L == t``. The empirical false-alarm rate is exactly
    ``alpha`` on the calibration set.
    """
    s = np.sort(np.asarray(llr_h0, dtype=float))[::-1]
    size = s.size
    m = min(int(math.floor(alpha * size)), size - 1)
    t = float(s[m])
    eq = _near(s, t)
    greater = int(np.count_nonzero((s > t) & ~eq))
    ties = int(np.count_nonzero(eq))
    gamma = min(max((alpha * size - greater) / ties, 0.0), 1.0)
    return t, gamma


def _solve_tilt(tilt: _Tilt, target: float) -> float:
    """lam in [0, 1] with E_{P_lam}[ln q/p] = target, clipped at the ends."""
    if target >= tilt.mean_llr(0.0):
        return 0.0
    if target <= tilt.mean_llr(1.0):
        return 1.0
    return float(optimize.brentq(lambda lam: tilt.mean_llr(lam) - target, 0.0, 1.0,
                                 xtol=1e-14, rtol=1e-14))


def _can_tilt(p: Pmf, q: Pmf, t: float, method: str) -> bool:
    if method == "plain" or not math.isfinite(t) or p == q:
        return False
    same_support = np.array_equal(p.probs > 0, q.probs > 0)
    if method == "tilted" and not same_support:
        raise ValueError("importance sampling needs p and q on the same support")
    return same_support


class _Proposal:
    """Tilted proposal on the common support with log-weights toward p and q."""

    def __init__(self, p: Pmf, q: Pmf, target_mean: float):
        self.mask = (p.probs > 0) & (q.probs > 0)
        tilt = _Tilt(p, q)
        self.lam = _solve_tilt(tilt, target_mean)
        log_r = tilt.log_pmf(self.lam)
        self.probs = np.exp(log_r)
        self.probs /= self.probs.sum()
        self.to_p = tilt.log_p - log_r
        self.to_q = tilt.log_q - log_r
        self.ell = tilt.ell


def _collect(gen, fn):
    parts = [fn(c) for c in gen]
    return np.concatenate(parts) if parts else np.empty(0)


def np_test(config: TestConfig) -> ErrorEstimate:
    """Neyman-Pearson test at false-alarm budget ``config.alpha``.

    The threshold and boundary randomization come from ``trials`` simulated
    legitimate images. ``alpha_hat`` is re-measured on a fresh set and
    ``beta_hat`` (missed fakes) is estimated on ``trials`` more.
    """
    p, q, n, trials, seed = config.p_legit, config.p_fake, config.n, config.trials, config.seed
    ell = log_ratio(p, q)
    flags: list[str] = []
    if p == q:
        flags.append("DegenerateDistributions")

    cal = _collect(_batches(p.probs, n, trials, seed, _STREAM_CAL), lambda c: _llr_counts(c, ell))
    t, gamma = calibrate_threshold(cal, config.alpha)

    def reject(values):
        eq = _near(values, t)
        return np.where(eq, gamma, (values > t).astype(float))

    fresh = _collect(_batches(p.probs, n, trials, seed, _STREAM_H0),
                     lambda c: reject(_llr_counts(c, ell)))
    alpha_hat = float(fresh.mean())
    alpha_hw = _halfwidth(alpha_hat, float(fresh.var(ddof=1)) / trials if trials > 1 else 0.0, trials)

    if _can_tilt(p, q, t, config.method):
        prop = _Proposal(p, q, t / n)

        def miss(c):
            values = c @ prop.ell
            return np.exp(c @ prop.to_q) * (1.0 - reject(values))

        vals = _collect(_batches(prop.probs, n, trials, seed, _STREAM_TILT),
                        miss)
        method, lam = "tilted", prop.lam
    else:
        vals = _collect(_batches(q.probs, n, trials, seed, _STREAM_H1),
                        lambda c: 1.0 - reject(_llr_counts(c, ell)))
        method, lam = "plain", None
    beta_hat = float(min(max(vals.mean(), 0.0), 1.0))
    var = float(vals.var(ddof=1)) / trials if trials > 1 else 0.0
    beta_hw = _halfwidth(beta_hat, var, trials)
    pi0, pi1 = config.priors
    return ErrorEstimate(
        test="np",
        alpha_hat=alpha_hat,
        beta_hat=beta_hat,
        pe_hat=pi0 * alpha_hat + pi1 * beta_hat,
        wilson_halfwidth=beta_hw,
        trials=trials,
        alpha_halfwidth=alpha_hw,
        beta_halfwidth=beta_hw,
        threshold=t,
        randomization=gamma,
        method=method,
        tilt=lam,
        flags=tuple(flags),
    )


def map_threshold(priors: tuple[float, float]) -> float:
    """MAP decision threshold ``ln(pi0/pi1)`` on the log-likelihood ratio."""
    pi0, pi1 = priors
    if pi1 == 0:
        return math.inf
    if pi0 == 0:
        return -math.inf
    return math.log(pi0 / pi1)


def bayes_test(config: TestConfig) -> ErrorEstimate:
    """MAP test: declare fake iff ``L > ln(pi0/pi1)``; ties go to legitimate.

    Hypotheses are stratified rather than drawn from the priors, so
    ``pe_hat = pi0 * alpha_hat + pi1 * beta_hat`` holds exactly. A hypothesis
    with zero prior is never simulated; its error rate is then fixed by the
    constant decision.
    """
    p, q, n, trials, seed = config.p_legit, config.p_fake, config.n, config.trials, config.seed
    pi0, pi1 = config.priors
    tau = map_threshold(config.priors)
    ell = log_ratio(p, q)
    flags: list[str] = []
    if p == q:
        flags.append("DegenerateDistributions")

    def decide_fake(values):
        return (values > tau) & ~_near(values, tau)

    if _can_tilt(p, q, tau, config.method):
        prop = _Proposal(p, q, tau / n)
        a_parts, b_parts = [], []
        for c in _batches(prop.probs, n, trials, seed, _STREAM_TILT):
            fake = decide_fake(c @ prop.ell)
            a_parts.append(np.exp(c @ prop.to_p) * fake)
            b_parts.append(np.exp(c @ prop.to_q) * ~fake)
        a_vals, b_vals = np.concatenate(a_parts), np.concatenate(b_parts)
        alpha_hat, beta_hat = float(a_vals.mean()), float(b_vals.mean())
        pe_vals = pi0 * a_vals + pi1 * b_vals
        var_a = float(a_vals.var(ddof=1)) / trials if trials > 1 else 0.0
        var_b = float(b_vals.var(ddof=1)) / trials if trials > 1 else 0.0
        var_pe = float(pe_vals.var(ddof=1)) / trials if trials > 1 else 0.0
        method, lam = "tilted", prop.lam
    else:
        if pi0 > 0:
            a_vals = _collect(_batches(p.probs, n, trials, seed, _STREAM_H0),
                              lambda c: decide_fake(_llr_counts(c, ell)).astype(float))
            alpha_hat = float(a_vals.mean())
        else:
            alpha_hat = 1.0
        if pi1 > 0:
            b_vals = _collect(_batches(q.probs, n, trials, seed, _STREAM_H1),
                              lambda c: (~decide_fake(_llr_counts(c, ell))).astype(float))
            beta_hat = float(b_vals.mean())
        else:
            beta_hat = 1.0
        var_a = alpha_hat * (1 - alpha_hat) / trials if pi0 > 0 else 0.0
        var_b = beta_hat * (1 - beta_hat) / trials if pi1 > 0 else 0.0
        var_pe = pi0 ** 2 * var_a + pi1 ** 2 * var_b
        method, lam = "plain", None
    alpha_hat = min(max(alpha_hat, 0.0), 1.0)
    beta_hat = min(max(beta_hat, 0.0), 1.0)
    pe_hat = pi0 * alpha_hat + pi1 * beta_hat
    pe_hw = _halfwidth(pe_hat, var_pe, trials)
    return ErrorEstimate(
        test="bayes",
        alpha_hat=alpha_hat,
        beta_hat=beta_hat,
        pe_hat=pe_hat,
        wilson_halfwidth=pe_hw,
        trials=trials,
        alpha_halfwidth=_halfwidth(alpha_hat, var_a, trials),
        beta_halfwidth=_halfwidth(beta_hat, var_b, trials),
        threshold=tau,
        method=method,
        tilt=lam,
        flags=tuple(flags),
    )


class ExactRates(NamedTuple):
    """Exact error probabilities from full enumeration."""

    bayes_alpha: float
    bayes_beta: float
    pe: float
    np_alpha: float | None = None
    np_beta: float | None = None


def exact_error_small_n(p: Pmf, q: Pmf, n: int, alpha: float | None = None,
                        priors: tuple[float, float] = (0.5, 0.5)) -> ExactRates:
    """Exact MAP (and optionally randomized NP) errors by enumerating every sequence.

    Only symbols carrying mass under ``p`` or ``q`` are enumerated; that
    count raised to ``n`` must stay below 1e7. Decision conventions match
    :func:`bayes_test` and :func:`np_test`.
    """
    check_alphabet(p, q)
    live = (p.probs > 0) | (q.probs > 0)
    k = int(live.sum())
    if k ** n > MAX_ENUMERATION:
        raise TooLarge(f"{k}^{n} sequences exceeds {MAX_ENUMERATION}")
    with np.errstate(divide="ignore"):
        lp1, lq1 = np.log(p.probs[live]), np.log(q.probs[live])
    logp, logq = np.zeros(1), np.zeros(1)
    for _ in range(n):
        logp = np.add.outer(logp, lp1).ravel()
        logq = np.add.outer(logq, lq1).ravel()
    keep = np.isfinite(logp) | np.isfinite(logq)
    logp, logq = logp[keep], logq[keep]
    prob_p, prob_q = np.exp(logp), np.exp(logq)
    with np.errstate(invalid="ignore"):
        stat = logq - logp

    pi0, pi1 = priors
    tau = map_threshold(priors)
    fake = (stat > tau) & ~_near(stat, tau)
    b_alpha = float(prob_p[fake].sum())
    b_beta = float(prob_q[~fake].sum())
    pe = pi0 * b_alpha + pi1 * b_beta

    np_alpha = np_beta = None
    if alpha is not None:
        order = np.argsort(-stat, kind="stable")
        s, pp, qq = stat[order], prob_p[order], prob_q[order]
        # group equal statistics (within tolerance) into atoms
        starts = [0]
        for i in range(1, s.size):
            if not (s[i] == s[starts[-1]] or
                    (math.isfinite(s[i]) and abs(s[i] - s[starts[-1]]) <= _tie_tol(s[starts[-1]]))):
                starts.append(i)
        starts.append(s.size)
        spent, beta_rejected = 0.0, 0.0
        for a, b in itertools.pairwise(starts):
            mass_p = float(pp[a:b].sum())
            if spent + mass_p <= alpha:
                spent += mass_p
                beta_rejected += float(qq[a:b].sum())
                continue
            gamma = (alpha - spent) / mass_p
            spent = alpha
            beta_rejected += gamma * float(qq[a:b].sum())
            break
        np_alpha = spent
        np_beta = max(1.0 - beta_rejected, 0.0)
    return ExactRates(b_alpha, b_beta, pe, np_alpha, np_beta)


class ExponentFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def fit_exponent(n_grid: Sequence[int], rates: Sequence[float]) -> ExponentFit:
    """Least-squares slope of ``-ln(rate)`` against ``n``."""
    n_grid = np.asarray(n_grid, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if n_grid.size < 2 or n_grid.size != rates.size:
        raise ValueError("need matching n_grid and rates with at least two points")
    if np.any(rates <= 0):
        bad = n_grid[rates <= 0].tolist()
        raise ZeroRateAtGridPoint(f"zero error rate at n={bad}; shrink n_grid or add trials")
    y = -np.log(rates)
    fit = stats.linregress(n_grid, y)
    r2 = float(fit.rvalue ** 2) if np.ptp(y) > 0 else 1.0
    return ExponentFit(float(fit.slope), float(fit.intercept), r2)


def exponent_fit(config: TestConfig, n_grid: Sequence[int],
                 tests: Sequence[str] = ("np", "bayes")) -> dict[str, ExponentFit]:
    """Fit error exponents over ``n_grid`` for each test type."""
    n_grid = list(n_grid)
    if len(n_grid) < 4:
        raise ValueError("n_grid needs at least four points")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    runners = {"np": np_test, "bayes": bayes_test}
    out = {}
    for test in tests:
        rates = [runners[test](replace(config, n=n)).rate for n in n_grid]
        out[test] = fit_exponent(n_grid, rates)
    return out


def predicted_log_rate(p: Pmf, q: Pmf, n: int, test: str) -> float:
    """Leading-order log error: ``-n D(p||q)`` (NP) or ``-n C(p, q)`` (Bayes)."""
    if test == "np":
        return -n * kl(p, q)
    return -n * chernoff_information(p, q).value


def run(config: TestConfig, test: str) -> ErrorEstimate:
    return {"np": np_test, "bayes": bayes_test}[test](config)
