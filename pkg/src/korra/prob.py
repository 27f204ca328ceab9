"""Finite discrete distributions with exact inference by enumeration.

This is the probabilistic sub-language the rest of the engine composes with:
distributions are immutable value objects, inference is exact (mixture,
conditioning, probability of evidence) and sampling is fully deterministic
given a named RNG stream.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Generic, Hashable, Iterable, Sequence, TypeVar

V = TypeVar("V", bound=Hashable)
U = TypeVar("U", bound=Hashable)

# Absolute tolerance used for every probability-equality assertion in the package.
PROB_TOLERANCE = 1e-9


class DistributionError(ValueError):
    """Raised when a distribution cannot be constructed or queried."""


class ImpossibleEvidenceError(DistributionError):
    """Conditioning on a predicate that carries zero probability mass."""


@dataclass(frozen=True)
class Evidence:
    """Probability of observed evidence: the pre-normalization mass kept by a condition."""

    poe: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.poe <= 1.0 + PROB_TOLERANCE:
            raise DistributionError(f"probability of evidence out of range: {self.poe}")


class RngStream:
    """A named, seeded random stream.

    Equal (seed, label) pairs produce identical draw sequences; distinct labels
    derive statistically independent streams from the same seed. Each engine
    subsystem owns its own stream so that adding draws in one subsystem never
    perturbs another.
    """

    def __init__(self, seed: int, label: str):
        self.seed = int(seed)
        self.label = label
        digest = hashlib.sha256(f"{self.seed}:{label}".encode()).digest()
        self._rng = random.Random(int.from_bytes(digest[:8], "big"))

    def spawn(self, sublabel: str) -> "RngStream":
        return RngStream(self.seed, f"{self.label}/{sublabel}")

    def random(self) -> float:
        return self._rng.random()

    def uniform(self, a: float, b: float) -> float:
        return self._rng.uniform(a, b)

    def gauss(self, mu: float, sigma: float) -> float:
        return self._rng.gauss(mu, sigma)

    def shuffle(self, items: list) -> None:
        self._rng.shuffle(items)

    def choice(self, items: Sequence):
        return items[self._rng.randrange(len(items))]

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, label={self.label!r})"


class FiniteDist(Generic[V]):
    """A finite discrete probability distribution over hashable values.

    Invariants (enforced at construction):
      * weights sum to 1 within ``PROB_TOLERANCE``
      * all weights are > 0 (zero-weight entries are dropped)
      * values are pairwise distinct (duplicates merged by summing weights)
      * the support is non-empty

    Instances are immutable; entry order is the first-seen order of values,
    which keeps log rendering stable.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: tuple[tuple[V, float], ...], *, _internal: bool = False):
        if not _internal:
            raise DistributionError("use from_weighted/point/bernoulli/uniform to build a FiniteDist")
        object.__setattr__(self, "_entries", entries)

    @property
    def entries(self) -> tuple[tuple[V, float], ...]:
        return self._entries

    @property
    def support(self) -> tuple[V, ...]:
        return tuple(v for v, _ in self._entries)

    def weight(self, value: V) -> float:
        for v, w in self._entries:
            if v == value:
                return w
        return 0.0

    def bind(self, kernel: Callable[[V], "FiniteDist[U]"]) -> "FiniteDist[U]":
        """Exact monadic composition: mixture of kernel outputs weighted by this dist."""
        acc: dict[U, float] = {}
        for v, w in self._entries:
            inner = kernel(v)
            for u, x in inner._entries:
                acc[u] = acc.get(u, 0.0) + w * x
        return from_weighted(acc.items())

    def map(self, fn: Callable[[V], U]) -> "FiniteDist[U]":
        return self.bind(lambda v: point(fn(v)))

    def prob_of(self, predicate: Callable[[V], bool]) -> float:
        """Total weight of values satisfying ``predicate``."""
        return math.fsum(w for v, w in self._entries if predicate(v))

    def condition(self, predicate: Callable[[V], bool]) -> tuple["FiniteDist[V]", Evidence]:
        """Posterior restricted to satisfying values, plus the probability of evidence.

        Raises ImpossibleEvidenceError when no mass satisfies the predicate;
        the caller decides the fallback.
        """
        kept = [(v, w) for v, w in self._entries if predicate(v)]
        poe = math.fsum(w for _, w in kept)
        if not kept or poe <= 0.0:
            raise ImpossibleEvidenceError("conditioning predicate has zero probability mass")
        return from_weighted(kept), Evidence(poe=min(poe, 1.0))

    def sample(self, rng: RngStream) -> V:
        """Draw one value; deterministic given the stream's (seed, label, draw index)."""
        r = rng.random()
        acc = 0.0
        for v, w in self._entries:
            acc += w
            if r < acc:
                return v
        return self._entries[-1][0]  # guards against last-ulp rounding

    def approx_eq(self, other: "FiniteDist[V]", tol: float = PROB_TOLERANCE) -> bool:
        mine = dict(self._entries)
        theirs = dict(other._entries)
        keys = set(mine) | set(theirs)
        return all(abs(mine.get(k, 0.0) - theirs.get(k, 0.0)) <= tol for k in keys)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteDist):
            return NotImplemented
        return dict(self._entries) == dict(other._entries)

    def __hash__(self) -> int:
        return hash(frozenset(self._entries))

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        body = ", ".join(f"{v!r}: {w:.6g}" for v, w in self._entries)
        return f"FiniteDist({{{body}}})"


def from_weighted(pairs: Iterable[tuple[V, float]]) -> FiniteDist[V]:
    """Build a distribution from (value, nonnegative weight) pairs.

    Duplicate values are merged by summing weights, zero-weight entries are
    dropped, and the result is normalized to sum to 1.
    """
    merged: dict[V, float] = {}
    for value, weight in pairs:
        w = float(weight)
        if math.isnan(w) or math.isinf(w):
            raise DistributionError(f"weight for {value!r} is not finite: {weight}")
        if w < 0.0:
            raise DistributionError(f"negative weight for {value!r}: {weight}")
        merged[value] = merged.get(value, 0.0) + w
    kept = [(v, w) for v, w in merged.items() if w > 0.0]
    if not kept:
        raise DistributionError("distribution needs at least one positive weight")
    total = math.fsum(w for _, w in kept)
    if total != 1.0:
        kept = [(v, w / total) for v, w in kept]
        kept = [(v, w) for v, w in kept if w > 0.0]  # subnormal inputs can underflow to 0
    if not kept:
        raise DistributionError("all weights underflowed to zero during normalization")
    return FiniteDist(tuple(kept), _internal=True)


def point(value: V) -> FiniteDist[V]:
    """The degenerate distribution putting all mass on one value."""
    return FiniteDist(((value, 1.0),), _internal=True)


def bernoulli(p: float) -> FiniteDist[bool]:
    """Distribution over {True, False} with P(True) = p; degenerate p is a point mass."""
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise DistributionError(f"bernoulli parameter out of [0, 1]: {p}")
    if p == 1.0:
        return point(True)
    if p == 0.0:
        return point(False)
    return FiniteDist(((True, p), (False, 1.0 - p)), _internal=True)


def uniform(values: Sequence[V]) -> FiniteDist[V]:
    return from_weighted((v, 1.0) for v in values)


def bind(d: FiniteDist[V], kernel: Callable[[V], FiniteDist[U]]) -> FiniteDist[U]:
    return d.bind(kernel)


def condition(d: FiniteDist[V], predicate: Callable[[V], bool]) -> tuple[FiniteDist[V], Evidence]:
    return d.condition(predicate)


def prob_of(d: FiniteDist[V], predicate: Callable[[V], bool]) -> float:
    return d.prob_of(predicate)


def sample(d: FiniteDist[V], rng: RngStream) -> V:
    return d.sample(rng)


# One '#' covers this many percentage points in histogram bars.
HISTOGRAM_BAR_UNIT = 7.5
HISTOGRAM_MAX_BAR = 13


def format_percent(fraction: float) -> str:
    """Render a probability as a percentage with 3 significant digits, never scientific."""
    s = f"{fraction * 100.0:.3g}"
    if "e" in s or "E" in s:
        s = format(Decimal(s), "f")
    return s


def histogram_text(
    d: FiniteDist,
    *,
    bar_unit: float = HISTOGRAM_BAR_UNIT,
    max_bar: int = HISTOGRAM_MAX_BAR,
) -> str:
    """One line per entry: ``<name> <percent>% <bar>``.

    Bar length is round(percent / bar_unit) capped at ``max_bar``; entries with
    nonzero weight always show at least one '#'. Zero-weight entries never
    exist in a FiniteDist, so every support value gets a line.
    """
    lines = []
    for value, weight in d.entries:
        percent = weight * 100.0
        bar = min(max_bar, round(percent / bar_unit))
        bar = max(bar, 1)
        lines.append(f"{value} {format_percent(weight)}% {'#' * bar}")
    return "\n".join(lines)
