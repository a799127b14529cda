"""Finite discrete distributions, metric alphabets and the i.i.d. image model.

Random draws go through numpy's PCG64 bit generator seeded by a
:class:`numpy.random.SeedSequence`, and symbols are produced by inverse-CDF
lookup on uniform doubles. Both pieces are specified bit-for-bit by numpy, so a
given ``(pmf, n, seed)`` yields the same symbols on every platform.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import BadSum, DuplicateLabel, NegativeMass, SpaceMismatch

#: Most negative entry accepted (and clamped to zero) by :func:`make_pmf`.
NEGATIVE_TOL = 1e-15
#: Allowed deviation of the input sum from one.
INPUT_SUM_TOL = 1e-9
#: Deviation of a stored distribution's sum from one.
STORED_SUM_TOL = 1e-12

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


def _frozen(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional stream path.

    Distinct stream paths give statistically independent generators, which
    is how Monte Carlo batches partition a single seed.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.PCG64(ss))


def patch_seed(seed: int, patch: int) -> int:
    """Sub-seed of patch ``patch``: ``seed`` xor a Fibonacci hash of the index.

    Patch 0 keeps ``seed`` unchanged.
    """
    return seed ^ ((patch * _GOLDEN64) & _MASK64)


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function over an ordered, labeled alphabet.

    Build instances with :func:`make_pmf`, which validates and normalizes.
    """

    labels: tuple[str, ...]
    probs: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Pmf):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash((self.labels, self.probs.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"{l}: {p:.6g}" for l, p in zip(self.labels, self.probs))
        return f"Pmf({body})"

    @property
    def support(self) -> np.ndarray:
        return self.probs > 0

    @property
    def min_mass(self) -> float:
        return float(self.probs.min())

    def to_dict(self) -> dict[str, Any]:
        return {"labels": list(self.labels), "probs": [float(x) for x in self.probs]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Pmf":
        unknown = set(data) - {"labels", "probs"}
        if unknown:
            raise KeyError(f"unknown Pmf field(s): {sorted(unknown)}")
        return make_pmf(data["probs"], data["labels"])


def make_pmf(probs: Sequence[float], labels: Sequence[Any] | None = None) -> Pmf:
    """Validate ``probs`` and build a :class:`Pmf`.

    Entries down to ``-1e-15`` are clamped to zero and a sum within ``1e-9`` of
    one is renormalized. Labels default to ``"0", "1", ...`` and are stored as
    strings.
    """
    arr = np.asarray(probs, dtype=float).ravel()
    if labels is None:
        labels = [str(i) for i in range(arr.size)]
    labels = tuple(str(l) for l in labels)
    if len(labels) != arr.size:
        raise ValueError(f"{arr.size} probabilities but {len(labels)} labels")
    if arr.size == 0:
        raise BadSum("empty distribution")
    if len(set(labels)) != len(labels):
        dupes = sorted({l for l in labels if labels.count(l) > 1})
        raise DuplicateLabel(f"duplicate labels: {dupes}")
    if not np.all(np.isfinite(arr)):
        raise BadSum("non-finite probability")
    if np.any(arr < -NEGATIVE_TOL):
        raise NegativeMass(f"negative mass {arr.min()!r}")
    arr = np.clip(arr, 0.0, None)
    total = arr.sum()
    if abs(total - 1.0) > INPUT_SUM_TOL:
        raise BadSum(f"probabilities sum to {total!r}")
    if abs(total - 1.0) > STORED_SUM_TOL:
        arr = arr / total
    return Pmf(labels, _frozen(arr))


def bernoulli(theta: float) -> Pmf:
    """Bern(theta) on labels ``("0", "1")`` with ``P("1") = theta``."""
    return make_pmf([1.0 - theta, theta], ["0", "1"])


def uniform(k: int, labels: Sequence[Any] | None = None) -> Pmf:
    return make_pmf(np.full(k, 1.0 / k), labels)


def point_mass(labels: Sequence[Any], at: Any) -> Pmf:
    labels = [str(l) for l in labels]
    probs = [1.0 if l == str(at) else 0.0 for l in labels]
    return make_pmf(probs, labels)


@dataclass(frozen=True, eq=False)
class MetricAlphabet:
    """Labels placed at nondecreasing real positions on a line."""

    labels: tuple[str, ...]
    positions: np.ndarray

    def __post_init__(self):
        if len(self.labels) != len(self.positions):
            raise SpaceMismatch("labels and positions differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise DuplicateLabel("duplicate labels in metric alphabet")
        if np.any(np.diff(self.positions) < 0):
            raise SpaceMismatch("positions must be nondecreasing")

    @property
    def diameter(self) -> float:
        return float(self.positions[-1] - self.positions[0])

    def to_dict(self) -> dict[str, Any]:
        return {"labels": list(self.labels), "positions": [float(x) for x in self.positions]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricAlphabet":
        unknown = set(data) - {"labels", "positions"}
        if unknown:
            raise KeyError(f"unknown MetricAlphabet field(s): {sorted(unknown)}")
        return make_space(data["positions"], data["labels"])


def make_space(positions: Sequence[float], labels: Sequence[Any] | None = None) -> MetricAlphabet:
    pos = np.asarray(positions, dtype=float).ravel()
    if labels is None:
        labels = [str(i) for i in range(pos.size)]
    if pos.size == 0:
        raise SpaceMismatch("empty metric alphabet")
    if not np.all(np.isfinite(pos)):
        raise SpaceMismatch("non-finite position")
    return MetricAlphabet(tuple(str(l) for l in labels), _frozen(pos))


@dataclass(frozen=True)
class Patch:
    pixel_count: int
    pmf_legit: Pmf
    pmf_fake: Pmf

    def __post_init__(self):
        if int(self.pixel_count) != self.pixel_count or self.pixel_count < 1:
            raise ValueError(f"pixel_count must be a positive integer, got {self.pixel_count}")
        if self.pmf_legit.labels != self.pmf_fake.labels:
            raise SpaceMismatch("a patch's legit and fake distributions must share an alphabet")


@dataclass(frozen=True)
class ImageModel:
    """An image of ``k`` independent patches, each with ``m_i`` i.i.d. pixels.

    ``large_m_declared`` records the caller's claim that every patch is big
    enough for asymptotic error exponents to be meaningful; nothing checks it.
    """

    patches: tuple[Patch, ...]
    large_m_declared: bool = False

    def __post_init__(self):
        if not self.patches:
            raise ValueError("an image model needs at least one patch")

    @property
    def n(self) -> int:
        return sum(p.pixel_count for p in self.patches)

    @property
    def k(self) -> int:
        return len(self.patches)

    def to_dict(self) -> dict[str, Any]:
        return {
            "patches": [
                {
                    "pixel_count": p.pixel_count,
                    "pmf_legit": p.pmf_legit.to_dict(),
                    "pmf_fake": p.pmf_fake.to_dict(),
                }
                for p in self.patches
            ],
            "large_m_declared": self.large_m_declared,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ImageModel":
        unknown = set(data) - {"patches", "large_m_declared"}
        if unknown:
            raise KeyError(f"unknown ImageModel field(s): {sorted(unknown)}")
        patches = []
        for entry in data["patches"]:
            extra = set(entry) - {"pixel_count", "pmf_legit", "pmf_fake"}
            if extra:
                raise KeyError(f"unknown patch field(s): {sorted(extra)}")
            patches.append(Patch(int(entry["pixel_count"]),
                                 Pmf.from_dict(entry["pmf_legit"]),
                                 Pmf.from_dict(entry["pmf_fake"])))
        return cls(tuple(patches), bool(data.get("large_m_declared", False)))


@dataclass(frozen=True, eq=False)
class Sample:
    """Symbols drawn under one hypothesis.

    ``symbols`` index into the generating alphabet. For an image sample the
    array is the concatenation of the patches, and ``alphabets``/``lengths``
    give each segment's label set and size.
    """

    symbols: np.ndarray
    source: str
    seed: int
    alphabets: tuple[tuple[str, ...], ...] = field(default=())
    lengths: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return int(self.symbols.size)

    def labels(self) -> list[str]:
        out: list[str] = []
        start = 0
        for alphabet, length in zip(self.alphabets, self.lengths):
            out.extend(alphabet[i] for i in self.symbols[start:start + length])
            start += length
        return out

    def segment(self, index: int) -> np.ndarray:
        start = sum(self.lengths[:index])
        return self.symbols[start:start + self.lengths[index]]

    def counts(self, size: int | None = None) -> np.ndarray:
        """Symbol tally; only meaningful for a single-alphabet sample."""
        if size is None:
            size = len(self.alphabets[0]) if self.alphabets else int(self.symbols.max()) + 1
        return np.bincount(self.symbols, minlength=size)


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, u, side="right")
    # rounding can leave cdf[-1] slightly below 1; map overflow to the last
    # symbol that actually carries mass
    last = int(np.flatnonzero(probs > 0)[-1])
    return np.minimum(idx, last)


def sample_iid(pmf: Pmf, n: int, seed: int, source: str = "") -> Sample:
    """Draw ``n`` i.i.d. symbols from ``pmf``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = make_rng(seed)
    symbols = _inverse_cdf(pmf.probs, rng.random(n))
    symbols.setflags(write=False)
    return Sample(symbols, source, seed, (pmf.labels,), (n,))


def sample_image(model: ImageModel, hypothesis: str, seed: int) -> Sample:
    """Draw a whole image under ``hypothesis`` (``"legit"`` or ``"fake"``).

    Patches are sampled independently, patch ``i`` with seed
    :func:`patch_seed` ``(seed, i)``.
    """
    if hypothesis not in ("legit", "fake"):
        raise ValueError(f"hypothesis must be 'legit' or 'fake', got {hypothesis!r}")
    parts, alphabets, lengths = [], [], []
    for i, patch in enumerate(model.patches):
        pmf = patch.pmf_legit if hypothesis == "legit" else patch.pmf_fake
        part = sample_iid(pmf, patch.pixel_count, patch_seed(seed, i))
        parts.append(part.symbols)
        alphabets.append(pmf.labels)
        lengths.append(patch.pixel_count)
    symbols = np.concatenate(parts)
    symbols.setflags(write=False)
    return Sample(symbols, hypothesis, seed, tuple(alphabets), tuple(lengths))


def random_pmf(rng: np.random.Generator, k: int, floor: float = 0.0,
               labels: Sequence[Any] | None = None) -> Pmf:
    """Dirichlet(1) draw on ``k`` symbols, mixed with uniform mass ``floor``.

    ``floor=0.5`` guarantees every symbol at least ``1/(2k)``.
    """
    probs = (1.0 - floor) * rng.dirichlet(np.ones(k)) + floor / k
    return make_pmf(probs, labels)


def load_json(path) -> Any:
    with open(path) as fh:
        return json.load(fh)
