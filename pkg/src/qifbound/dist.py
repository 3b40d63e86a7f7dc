"""Finite probability distributions with exact rational weights.

A :class:`Dist` is an ordered sample space paired with one
:class:`~fractions.Fraction` per point.  Points are usually bitstrings in
declared variable order (for joint high/low distributions, the high bits
followed by the low-input bits), but any hashable value works, which the
entropy helpers use for tuple-valued joint points.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

from .errors import DistributionError, SupportError

Weight = Fraction


def to_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, ``"a/b"`` or decimal string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise DistributionError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise DistributionError(f"not a rational: {x!r}") from None
    if isinstance(x, float):
        return Fraction(x)
    raise DistributionError(f"not a rational: {x!r}")


@dataclass(frozen=True)
class Dist:
    space: tuple
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        space = tuple(self.space)
        weights = tuple(to_fraction(w) for w in self.weights)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "weights", weights)
        if not space:
            raise DistributionError("empty sample space")
        if len(space) != len(weights):
            raise DistributionError("space and weights differ in length")
        if len(set(space)) != len(space):
            raise DistributionError("sample space has repeated points")
        if any(w < 0 for w in weights):
            raise DistributionError("negative weight")
        total = sum(weights)
        if total != 1:
            raise DistributionError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(space)})

    @classmethod
    def from_mapping(cls, mapping: Mapping, space: Sequence | None = None) -> Dist:
        if space is None:
            space = list(mapping)
        extra = set(mapping) - set(space)
        if extra:
            raise DistributionError(f"points outside the sample space: {sorted(map(str, extra))}")
        return cls(tuple(space), tuple(to_fraction(mapping.get(p, 0)) for p in space))

    def __getitem__(self, point) -> Fraction:
        i = self._index.get(point)
        if i is None:
            raise DistributionError(f"point {point!r} is not in the sample space")
        return self.weights[i]

    def get(self, point, default=Fraction(0)) -> Fraction:
        i = self._index.get(point)
        return default if i is None else self.weights[i]

    def __contains__(self, point) -> bool:
        return point in self._index

    def __len__(self):
        return len(self.space)

    def items(self) -> Iterator[tuple[Hashable, Fraction]]:
        return zip(self.space, self.weights)

    @property
    def support(self) -> tuple:
        return tuple(p for p, w in self.items() if w > 0)

    @property
    def has_full_support(self) -> bool:
        return all(w > 0 for w in self.weights)

    def marginal(self, key: Callable) -> Dist:
        """Push forward along ``key``; result points appear in first-seen order."""
        acc: dict = {}
        for p, w in self.items():
            k = key(p)
            acc[k] = acc.get(k, Fraction(0)) + w
        return Dist(tuple(acc), tuple(acc.values()))

    def condition(self, event: Callable[[Hashable], bool]) -> Dist:
        """Conditional distribution on ``event`` over the same sample space."""
        mass = sum((w for p, w in self.items() if event(p)), Fraction(0))
        if mass == 0:
            raise DistributionError("conditioning on an event of probability zero")
        return Dist(self.space, tuple(w / mass if event(p) else Fraction(0) for p, w in self.items()))

    def to_json(self) -> dict:
        return {"space": [str(p) for p in self.space], "weights": [_frac_str(w) for w in self.weights]}

    @classmethod
    def from_json(cls, obj) -> Dist:
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(tuple(obj["space"]), tuple(to_fraction(w) for w in obj["weights"]))
        except (KeyError, TypeError):
            raise DistributionError('expected {"space": [...], "weights": [...]}') from None


def _frac_str(w: Fraction) -> str:
    return f"{w.numerator}/{w.denominator}"


def uniform(space: Iterable) -> Dist:
    space = tuple(space)
    if not space:
        raise DistributionError("uniform distribution over an empty space")
    w = Fraction(1, len(space))
    return Dist(space, (w,) * len(space))


def point_mass(point, space: Iterable) -> Dist:
    space = tuple(space)
    if point not in space:
        raise DistributionError(f"point {point!r} is not in the sample space")
    return Dist(space, tuple(Fraction(int(p == point)) for p in space))


def product_with_point(u: Dist, low, low_space: Iterable) -> Dist:
    """Joint distribution over ``h + l`` points putting ``u`` on column ``low``."""
    low_space = tuple(low_space)
    if low not in low_space:
        raise DistributionError(f"low input {low!r} is not in the low space")
    space, weights = [], []
    for h, w in u.items():
        for l in low_space:
            space.append(h + l)
            weights.append(w if l == low else Fraction(0))
    return Dist(tuple(space), tuple(weights))


def product(a: Dist, b: Dist) -> Dist:
    """Independent product over concatenated points."""
    space, weights = [], []
    for p, v in a.items():
        for r, w in b.items():
            space.append(p + r)
            weights.append(v * w)
    return Dist(tuple(space), tuple(weights))


class Belief(Dist):
    """Distribution over high inputs that gives every point positive weight."""

    def __post_init__(self):
        super().__post_init__()
        if not self.has_full_support:
            raise SupportError("a belief must give every high input positive weight")

    @classmethod
    def of(cls, d: Dist) -> Belief:
        return d if isinstance(d, Belief) else cls(d.space, d.weights)


@dataclass(frozen=True)
class Experiment:
    """A belief together with the actual high input and the chosen low input."""

    belief: Belief
    h: str
    l: str = ""

    def __post_init__(self):
        object.__setattr__(self, "belief", Belief.of(self.belief))
        if self.h not in self.belief:
            raise DistributionError(f"high input {self.h!r} is outside the belief's space")


def output_mass(belief: Dist, table, l, o: str) -> Fraction:
    """Probability of output ``o`` at low input ``l`` when ``H`` follows ``belief``."""
    j = table.low_index(l)
    code = int(o, 2) if o else 0
    col = table.codes[:, j]
    return sum((belief[h] for h, c in zip(table.high_space, col.tolist()) if c == code), Fraction(0))


def posterior(belief: Dist, program, l, o: str) -> Dist:
    """Belief revised after seeing output ``o`` at low input ``l``."""
    from .boolprog import _table

    table = _table(program)
    if set(belief.space) != set(table.high_space):
        raise DistributionError("belief is not over the program's high inputs")
    j = table.low_index(l)
    code = int(o, 2) if o else 0
    col = dict(zip(table.high_space, table.codes[:, j].tolist()))
    mass = sum((w for h, w in belief.items() if col[h] == code), Fraction(0))
    if mass == 0:
        raise DistributionError(f"output {o!r} has probability zero at low input {l!r}")
    return Dist(belief.space, tuple(w / mass if col[h] == code else Fraction(0) for h, w in belief.items()))


def relative_entropy(source: Dist, target: Dist) -> float:
    """Distance ``D(source -> target) = sum target(x) log2(target(x)/source(x))``."""
    total = 0.0
    for p, w in target.items():
        if w == 0:
            continue
        v = source.get(p)
        if v == 0:
            raise SupportError(f"target puts weight on {p!r} where the source has none")
        total += float(w) * (_log2(w) - _log2(v))
    return total


def _log2(x: Fraction) -> float:
    return math.log2(x.numerator) - math.log2(x.denominator)
