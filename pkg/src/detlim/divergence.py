"""Divergences and distances between two distributions on a shared alphabet.

All information quantities are in nats. ``math.inf`` stands for an infinite
divergence and propagates through the bound formulas unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .distributions import MetricAlphabet, Pmf, make_pmf
from .errors import AlphabetMismatch, SpaceMismatch, ZeroWeightAtDifference

LAMBDA_LO = 1e-9
LAMBDA_HI = 1.0 - 1e-9
BISECTION_TOL = 1e-10
BISECTION_MAXITER = 200


def check_alphabet(p: Pmf, q: Pmf) -> None:
    if p.labels != q.labels:
        raise AlphabetMismatch(f"alphabets differ: {p.labels} vs {q.labels}")


def _xlogy_ratio(a: np.ndarray, b: np.ndarray) -> float:
    # sum a*log(a/b) over a > 0, assuming b > 0 wherever a > 0
    mask = a > 0
    return float(np.sum(a[mask] * (np.log(a[mask]) - np.log(b[mask]))))


def kl(p: Pmf, q: Pmf) -> float:
    """Kullback-Leibler divergence D(p||q) in nats; ``inf`` if p is not << q."""
    check_alphabet(p, q)
    if np.any((p.probs > 0) & (q.probs == 0)):
        return math.inf
    return max(_xlogy_ratio(p.probs, q.probs), 0.0)


def tv(p: Pmf, q: Pmf) -> float:
    check_alphabet(p, q)
    return float(min(0.5 * np.abs(p.probs - q.probs).sum(), 1.0))


def js(p: Pmf, q: Pmf) -> float:
    """Jensen-Shannon divergence via the midpoint mixture; lies in [0, ln 2]."""
    check_alphabet(p, q)
    m = 0.5 * (p.probs + q.probs)
    value = 0.5 * (_xlogy_ratio(p.probs, m) + _xlogy_ratio(q.probs, m))
    return float(min(max(value, 0.0), math.log(2.0)))


def wasserstein_1d(p: Pmf, q: Pmf, space: MetricAlphabet) -> float:
    """Exact W1 on the line: integral of |F_p - F_q| over the gaps between positions."""
    check_alphabet(p, q)
    if space.labels != p.labels:
        raise SpaceMismatch(f"space labels {space.labels} do not match {p.labels}")
    gaps = np.diff(space.positions)
    cdf_gap = np.abs(np.cumsum(p.probs) - np.cumsum(q.probs))[:-1]
    return float(np.sum(cdf_gap * gaps))


class ChernoffResult(NamedTuple):
    value: float
    lambda_star: float

    @property
    def disjoint(self) -> bool:
        """True when the supports do not meet and the tilted family is undefined."""
        return math.isinf(self.value)


class _Tilt:
    """Geometric mixtures p^lam q^(1-lam) / Z restricted to the common support."""

    def __init__(self, p: Pmf, q: Pmf):
        mask = (p.probs > 0) & (q.probs > 0)
        self.log_p = np.log(p.probs[mask])
        self.log_q = np.log(q.probs[mask])
        self.ell = self.log_q - self.log_p

    def log_pmf(self, lam: float) -> np.ndarray:
        a = lam * self.log_p + (1.0 - lam) * self.log_q
        return a - logsumexp(a)

    def log_partition(self, lam: float) -> float:
        return float(logsumexp(lam * self.log_p + (1.0 - lam) * self.log_q))

    def divergences(self, lam: float) -> tuple[float, float]:
        """(D(P_lam||p), D(P_lam||q))."""
        log_t = self.log_pmf(lam)
        t = np.exp(log_t)
        return float(np.sum(t * (log_t - self.log_p))), float(np.sum(t * (log_t - self.log_q)))

    def mean_llr(self, lam: float) -> float:
        """E_{P_lam}[ln q/p], which equals D(P_lam||p) - D(P_lam||q)."""
        return float(np.sum(np.exp(self.log_pmf(lam)) * self.ell))


def tilted(p: Pmf, q: Pmf, lam: float) -> Pmf:
    """The normalized geometric mixture P_lam proportional to p^lam q^(1-lam)."""
    check_alphabet(p, q)
    tilt = _Tilt(p, q)
    if tilt.ell.size == 0:
        raise AlphabetMismatch("tilted mixture undefined for disjoint supports")
    probs = np.zeros(len(p))
    probs[(p.probs > 0) & (q.probs > 0)] = np.exp(tilt.log_pmf(lam))
    return make_pmf(probs, p.labels)


def chernoff_information(p: Pmf, q: Pmf) -> ChernoffResult:
    """Chernoff information C(p, q) and the equalizing tilt parameter.

    Bisection on lam in [1e-9, 1 - 1e-9] for D(P_lam||p) = D(P_lam||q) to
    within 1e-10. When no interior root exists (the log-ratio is constant on
    the common support) the better endpoint is returned.
    """
    check_alphabet(p, q)
    if p == q:
        return ChernoffResult(0.0, 0.5)
    tilt = _Tilt(p, q)
    if tilt.ell.size == 0:
        return ChernoffResult(math.inf, math.nan)

    lo, hi = LAMBDA_LO, LAMBDA_HI
    g_lo, g_hi = tilt.mean_llr(lo), tilt.mean_llr(hi)
    if g_lo <= 0 or g_hi >= 0:
        # mean log-ratio keeps one sign: -ln Z is monotone, optimum at an end
        lam = lo if g_lo <= 0 else hi
        return ChernoffResult(max(-tilt.log_partition(lam), 0.0), lam)

    lam = 0.5 * (lo + hi)
    for _ in range(BISECTION_MAXITER):
        lam = 0.5 * (lo + hi)
        g = tilt.mean_llr(lam)
        if abs(g) <= BISECTION_TOL:
            break
        if g > 0:
            lo = lam
        else:
            hi = lam
    d_p, d_q = tilt.divergences(lam)
    return ChernoffResult(max(0.5 * (d_p + d_q), 0.0), lam)


def chernoff_gap(p: Pmf, q: Pmf, lam: float) -> float:
    """|D(P_lam||p) - D(P_lam||q)|, the equalization residual at ``lam``."""
    d_p, d_q = _Tilt(p, q).divergences(lam)
    return abs(d_p - d_q)


def chernoff_tv_lower_bound(p: Pmf, q: Pmf) -> float:
    """-1/2 ln(1 - TV^2), a lower bound on the Chernoff information."""
    t = tv(p, q)
    if t >= 1.0:
        return math.inf
    return -0.5 * math.log1p(-t * t)


def _weights(p: Pmf, q: Pmf, weight: Pmf | None) -> np.ndarray:
    check_alphabet(p, q)
    if weight is None:
        return 0.5 * (p.probs + q.probs)
    check_alphabet(p, weight)
    return weight.probs


def chi_squared_weighted(p: Pmf, q: Pmf, weight: Pmf | None = None) -> float:
    """Weighted squared Euclidean norm sum (p - q)^2 / weight.

    ``weight`` defaults to the midpoint (p + q) / 2.
    """
    w = _weights(p, q, weight)
    diff = p.probs - q.probs
    active = diff != 0
    if np.any(w[active] <= 0):
        raise ZeroWeightAtDifference("weight vanishes where p and q differ")
    return float(np.sum(diff[active] ** 2 / w[active]))


def euclidean_kl_approx(p: Pmf, q: Pmf, weight: Pmf | None = None) -> float:
    """Local quadratic approximation D(p||q) ~ chi2(p, q; weight) / 2."""
    return 0.5 * chi_squared_weighted(p, q, weight)


def euclidean_chernoff_approx(p: Pmf, q: Pmf) -> float:
    """Chernoff information of nearby distributions, approximated by D(p||q) / 4."""
    return kl(p, q) / 4.0


def _json_float(x: float | None) -> Any:
    if x is None:
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


@dataclass(frozen=True)
class DivergenceReport:
    kl_forward: float
    tv: float
    js: float
    wasserstein: float | None
    chernoff: float
    chernoff_lambda: float

    def to_dict(self) -> dict[str, Any]:
        return {k: _json_float(v) for k, v in self.__dict__.items()}


def divergence_report(p: Pmf, q: Pmf, space: MetricAlphabet | None = None) -> DivergenceReport:
    c = chernoff_information(p, q)
    return DivergenceReport(
        kl_forward=kl(p, q),
        tv=tv(p, q),
        js=js(p, q),
        wasserstein=None if space is None else wasserstein_1d(p, q, space),
        chernoff=c.value,
        chernoff_lambda=c.lambda_star,
    )
