"""Closed-form detection error bounds for a GAN summarized by its oracle error.

Each bound has the form ``exp(n * e)`` (general-regime Bayesian bounds:
``base ** (n / 2)``), so everything is evaluated in the log domain first;
at n near 1e6 pixels the linear values underflow. Bounds are clamped to
[0, 1].

The Neyman-Pearson bounds restate an asymptotic (Chernoff-Stein)
equality as an upper bound. They hold up to sub-exponential factors, provided
``opt`` does not exceed the true divergence of the generated distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

from .distributions import MetricAlphabet, Pmf
from .divergence import (
    chernoff_information,
    chernoff_tv_lower_bound,
    check_alphabet,
    js,
    kl,
    tv,
    wasserstein_1d,
)
from .errors import InvalidBase, InvalidSpec, MissingDiam, MissingPgStar

KINDS = ("kl", "tv", "js", "wasserstein")
REGIMES = ("general", "euclidean")
TESTS = ("np", "bayes")

INEQUALITY_TOL = 1e-12
_RANGE_TOL = 1e-12

ASYMPTOTIC_NOTE = (
    "exponent statement: valid for large n up to sub-exponential factors, "
    "and only when opt lower-bounds the true divergence"
)


@dataclass(frozen=True)
class GanSpec:
    """A GAN reduced to its L-function, oracle error and auxiliary constants.

    ``p_g_star`` (smallest generated mass) is used only by the general-regime
    KL Bayesian bound; ``diam`` (diameter of the pixel space) only by the
    Wasserstein bounds.
    """

    l_kind: str
    opt: float
    p_g_star: float | None = None
    diam: float | None = None

    def __post_init__(self):
        kind = str(self.l_kind).lower()
        if kind not in KINDS:
            raise InvalidSpec(f"l_kind must be one of {KINDS}, got {self.l_kind!r}")
        object.__setattr__(self, "l_kind", kind)
        if not (self.opt >= 0 and math.isfinite(self.opt)):
            raise InvalidSpec(f"opt must be a finite non-negative number, got {self.opt!r}")
        if self.p_g_star is not None:
            if kind != "kl":
                raise InvalidSpec("p_g_star only applies to l_kind='kl'")
            if not 0 < self.p_g_star <= 1:
                raise InvalidSpec(f"p_g_star must lie in (0, 1], got {self.p_g_star!r}")
        if self.diam is not None:
            if kind != "wasserstein":
                raise InvalidSpec("diam only applies to l_kind='wasserstein'")
            if not (self.diam > 0 and math.isfinite(self.diam)):
                raise InvalidSpec(f"diam must be positive, got {self.diam!r}")
        if kind == "tv" and self.opt > 1 + _RANGE_TOL:
            raise InvalidSpec(f"TV oracle error must be <= 1, got {self.opt}")
        if kind == "js" and self.opt > math.log(2) + _RANGE_TOL:
            raise InvalidSpec(f"JS oracle error must be <= ln 2, got {self.opt}")
        if kind == "wasserstein" and self.diam is not None and self.opt > self.diam * (1 + _RANGE_TOL):
            raise InvalidSpec(f"Wasserstein oracle error {self.opt} exceeds diam {self.diam}")

    def with_opt(self, opt: float) -> "GanSpec":
        return GanSpec(self.l_kind, opt, self.p_g_star, self.diam)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"l_kind": self.l_kind, "opt": self.opt}
        if self.p_g_star is not None:
            out["p_g_star"] = self.p_g_star
        if self.diam is not None:
            out["diam"] = self.diam
        return out


def _diam(spec: GanSpec) -> float:
    if spec.diam is None:
        raise MissingDiam("Wasserstein bounds need the space diameter")
    return spec.diam


def _check(n: float, regime: str, test: str) -> None:
    if not n > 0:
        raise ValueError(f"n must be positive, got {n}")
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    if test not in TESTS:
        raise ValueError(f"test must be one of {TESTS}, got {test!r}")


def _general_bayes_base(spec: GanSpec) -> float:
    opt = spec.opt
    if spec.l_kind == "kl":
        if spec.p_g_star is None:
            raise MissingPgStar("the general-regime KL Bayesian bound needs p_g_star")
        base = 1.0 - spec.p_g_star * opt / 4.0
    elif spec.l_kind == "tv":
        base = 1.0 - opt * opt
    elif spec.l_kind == "js":
        base = 1.0 - opt * opt / 4.0
    else:
        base = 1.0 - (opt / _diam(spec)) ** 2
    if base < -_RANGE_TOL:
        raise InvalidBase(f"bound base {base} < 0: opt={opt} is outside the admissible range")
    return min(max(base, 0.0), 1.0)


def exponent(spec: GanSpec, regime: str, test: str) -> float:
    """Per-pixel exponent ``f`` such that the bound equals ``exp(-n f)``."""
    _check(1, regime, test)
    opt, kind = spec.opt, spec.l_kind
    if regime == "general" and test == "bayes":
        base = _general_bayes_base(spec)
        return math.inf if base == 0.0 else -0.5 * math.log(base)
    if kind == "kl":
        f = opt
    elif kind == "tv":
        f = 2.0 * opt * opt
    elif kind == "js":
        f = 2.0 * opt if regime == "euclidean" else 0.5 * opt * opt
    else:
        f = 2.0 * opt * opt / _diam(spec) ** 2
    if regime == "euclidean" and test == "bayes":
        f /= 4.0
    return f


def log_bound(spec: GanSpec, n: float, regime: str = "general", test: str = "np") -> float:
    """Natural log of the selected bound; ``-inf`` when the bound is exactly zero."""
    _check(n, regime, test)
    f = exponent(spec, regime, test)
    if f == 0.0:
        return 0.0
    return min(-n * f, 0.0)


def _linear(spec: GanSpec, n: float, regime: str, test: str) -> float:
    return min(math.exp(log_bound(spec, n, regime, test)), 1.0)


def table1_np(spec: GanSpec, n: float) -> float:
    return _linear(spec, n, "general", "np")


def table1_bayes(spec: GanSpec, n: float) -> float:
    return _linear(spec, n, "general", "bayes")


def table2_np(spec: GanSpec, n: float) -> float:
    return _linear(spec, n, "euclidean", "np")


def table2_bayes(spec: GanSpec, n: float) -> float:
    return _linear(spec, n, "euclidean", "bayes")


@dataclass(frozen=True)
class BoundReport:
    regime: str
    test: str
    n: float
    spec: GanSpec
    log_bound: float
    bound: float
    note: str = ASYMPTOTIC_NOTE

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "regime": self.regime,
            "test": self.test,
            "n": self.n,
            "l_kind": self.spec.l_kind,
            "opt": self.spec.opt,
            "bound": self.bound,
            "log_bound": "-inf" if self.log_bound == -math.inf else self.log_bound,
        }
        if self.spec.p_g_star is not None:
            out["p_g_star"] = self.spec.p_g_star
        if self.spec.diam is not None:
            out["diam"] = self.spec.diam
        out["note"] = self.note
        return out


def bound_report(spec: GanSpec, n: float, regime: str = "general", test: str = "np") -> BoundReport:
    lb = log_bound(spec, n, regime, test)
    return BoundReport(regime, test, n, spec, lb, min(math.exp(lb), 1.0))


class PatchBound(NamedTuple):
    bound: float
    log_bound: float


def patch_bound(model_spec: Sequence[tuple[int, GanSpec]], regime: str = "general",
                test: str = "np") -> PatchBound:
    """Bound for an image of independent patches: the product of per-patch bounds.

    Each entry is ``(m_i, spec_i)``, with the single-patch bound evaluated at
    ``n = m_i``. Specs may carry their own ``p_g_star`` and ``diam``.
    """
    if not model_spec:
        raise ValueError("need at least one patch")
    total = 0.0
    for m, spec in model_spec:
        total += log_bound(spec, m, regime, test)
    return PatchBound(min(math.exp(total), 1.0), total)


def patch_specs(patches, l_kind: str, spaces: Sequence[MetricAlphabet] | None = None
                ) -> list[tuple[int, GanSpec]]:
    """Per-patch specs whose oracle error is the exact L-distance of each patch.

    ``patches`` is an iterable of :class:`~detlim.distributions.Patch`. The
    smallest fake mass becomes ``p_g_star`` for KL; Wasserstein needs one
    metric space per patch.
    """
    out = []
    for i, patch in enumerate(patches):
        p, q = patch.pmf_legit, patch.pmf_fake
        kind = l_kind.lower()
        if kind == "kl":
            pg = q.min_mass
            spec = GanSpec("kl", kl(p, q), p_g_star=pg if pg > 0 else None)
        elif kind == "tv":
            spec = GanSpec("tv", tv(p, q))
        elif kind == "js":
            spec = GanSpec("js", js(p, q))
        else:
            if spaces is None:
                raise MissingDiam("Wasserstein patch specs need metric spaces")
            spec = GanSpec("wasserstein", wasserstein_1d(p, q, spaces[i]), diam=spaces[i].diameter)
        out.append((patch.pixel_count, spec))
    return out


@dataclass(frozen=True)
class InequalityCheck:
    """One inequality ``lhs <= rhs`` with slack ``rhs - lhs``."""

    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        if math.isinf(self.rhs) and self.rhs > 0:
            return math.inf
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= -INEQUALITY_TOL

    def to_dict(self) -> dict[str, Any]:
        def enc(x):
            return ("inf" if x > 0 else "-inf") if math.isinf(x) else x
        return {"lhs": enc(self.lhs), "rhs": enc(self.rhs), "slack": enc(self.slack),
                "holds": self.holds}


@dataclass(frozen=True)
class InequalityReport:
    pinsker: InequalityCheck
    reverse_pinsker: InequalityCheck | None
    js_tv: InequalityCheck
    wasserstein_tv: InequalityCheck | None
    chernoff_tv: InequalityCheck = field(default=None)

    def checks(self) -> list[InequalityCheck]:
        return [c for c in (self.pinsker, self.reverse_pinsker, self.js_tv,
                            self.wasserstein_tv, self.chernoff_tv) if c is not None]

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks())

    def to_dict(self) -> dict[str, Any]:
        return {c.name: c.to_dict() for c in self.checks()}


def check_inequalities(p: Pmf, q: Pmf, space: MetricAlphabet | None = None,
                       chernoff: bool = True) -> InequalityReport:
    """Evaluate Pinsker, reverse Pinsker, JS <= 2 TV and W <= diam TV on (p, q).

    Reverse Pinsker is only evaluated when every q mass is positive, the
    Wasserstein bound only when a space is given. With ``chernoff`` the
    TV lower bound on the Chernoff information is checked as well.
    """
    check_alphabet(p, q)
    t = tv(p, q)
    d = kl(p, q)
    pinsker = InequalityCheck("pinsker", t * t, 0.5 * d)
    reverse = None
    if q.min_mass > 0:
        reverse = InequalityCheck("reverse_pinsker", d, 4.0 / q.min_mass * t * t)
    js_tv = InequalityCheck("js_tv", js(p, q), 2.0 * t)
    w_tv = None
    if space is not None:
        w_tv = InequalityCheck("wasserstein_tv", wasserstein_1d(p, q, space), space.diameter * t)
    c_tv = None
    if chernoff:
        c_tv = InequalityCheck("chernoff_tv", chernoff_tv_lower_bound(p, q),
                               chernoff_information(p, q).value)
    return InequalityReport(pinsker, reverse, js_tv, w_tv, c_tv)
