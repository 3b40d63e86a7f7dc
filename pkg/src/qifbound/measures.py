"""Entropy notions and the five leakage measures of deterministic programs.

Generic helpers work on :class:`~qifbound.dist.Dist` objects whose points
are tuples, e.g. ``(x, y)`` for a joint over ``X`` and ``Y``.  The
program-level measures accept a :class:`~qifbound.boolprog.Program` or an
:class:`~qifbound.boolprog.IOTable` and an optional joint input
distribution over ``h + l`` bitstrings (uniform when omitted).

Every program-level measure is computed from its defining formula and,
where a counting closed form exists, from that too; the second value is
kept in :attr:`QifValue.cross_check` so callers and tests can compare.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath

from .boolprog import IOTable, _table
from .dist import Dist, Experiment, point_mass, posterior, relative_entropy, uniform
from .errors import DistributionError, QifError

FLOAT_BITS = 53
DEFINITIONAL_LIMIT = 1 << 12  # joint points beyond which the definitional path is skipped


def log2_fraction(x: Fraction) -> float:
    x = Fraction(x)
    return math.log2(x.numerator) - math.log2(x.denominator)


def fmt_float(x: float) -> float:
    """Round to 12 significant digits for stable reports."""
    return float(f"{x:.12g}")


@dataclass(frozen=True)
class QifValue:
    """A measured quantity in bits with whatever exact information is known.

    ``exact`` holds the value itself when it is rational (GE and friends);
    ``log_of`` holds ``r`` when the value is exactly ``log2(r)`` for a
    rational ``r`` (ME, CC, BE).  ``cross_check`` is the value computed by
    an independent route, if one was run.
    """

    measure: str
    value: float
    exact: Fraction | None = None
    log_of: Fraction | None = None
    precision_bits: int = FLOAT_BITS
    witness_low: str | None = None
    cross_check: float | None = None
    log_linear: LogLinear | None = field(default=None, compare=False)

    def to_json(self) -> dict:
        out = {
            "measure": self.measure,
            "bits": fmt_float(self.value),
            "exact": None if self.exact is None else _fstr(self.exact),
            "precisionBits": self.precision_bits,
        }
        if self.log_of is not None:
            out["logOf"] = _fstr(self.log_of)
        if self.measure in ("CC", "MECC", "GECC"):
            out["witnessLow"] = self.witness_low
        return out

    def __str__(self):
        if self.exact is not None:
            return f"{self.measure} = {_fstr(self.exact)} ({self.value:.12g} bits)"
        if self.log_of is not None and self.log_of != 1:
            return f"{self.measure} = log({_fstr(self.log_of)}) ≈ {self.value:.12g} bits"
        return f"{self.measure} ≈ {self.value:.12g} bits"


def _fstr(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _precision_for(value: float, exact: Fraction) -> int:
    err = abs(Fraction(value) - exact)
    if err == 0:
        return FLOAT_BITS
    bits = math.ceil(-math.log2(err)) - 1
    return max(0, min(FLOAT_BITS, bits))


def _rational_value(measure: str, exact: Fraction, **kw) -> QifValue:
    value = float(exact)
    return QifValue(measure, value, exact=exact, precision_bits=_precision_for(value, exact), **kw)


def _log_value(measure: str, r: Fraction, **kw) -> QifValue:
    r = Fraction(r)
    exact = Fraction(0) if r == 1 else None
    return QifValue(measure, log2_fraction(r), exact=exact, log_of=r, **kw)


# ---------------------------------------------------------------------------
# Exact sums of logarithms


@lru_cache(maxsize=65536)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation of a positive integer by trial division."""
    if n < 1:
        raise ValueError("factorize needs a positive integer")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            k = 0
            while n % p == 0:
                n //= p
                k += 1
            out.append((p, k))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


@dataclass(frozen=True)
class LogLinear:
    """A real of the form ``rational + sum(coef * log2(p))`` over odd primes ``p``."""

    rational: Fraction
    logs: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def build(cls, terms: Sequence[tuple[Fraction, int]], rational: Fraction = Fraction(0)) -> LogLinear:
        """Sum of ``coef * log2(n)`` for positive integers ``n``."""
        acc: dict[int, Fraction] = {}
        rat = Fraction(rational)
        for coef, n in terms:
            for p, k in factorize(int(n)):
                if p == 2:
                    rat += coef * k
                else:
                    acc[p] = acc.get(p, Fraction(0)) + coef * k
        return cls(rat, tuple(sorted((p, c) for p, c in acc.items() if c != 0)))

    def to_float(self) -> float:
        return float(self.rational) + math.fsum(float(c) * math.log2(p) for p, c in self.logs)

    def evaluate(self, prec: int):
        with mpmath.workprec(prec):
            total = mpmath.mpf(self.rational.numerator) / self.rational.denominator
            for p, c in self.logs:
                total += mpmath.mpf(c.numerator) / c.denominator * mpmath.log(p, 2)
            return +total

    def compare(self, q: Fraction, budget_bits: int = 1 << 23) -> int | None:
        """Exact sign of ``self - q``; ``None`` when the integers would be too large."""
        diff = self.rational - Fraction(q)
        denom = diff.denominator
        for _, c in self.logs:
            denom = denom * c.denominator // math.gcd(denom, c.denominator)
        r0 = int(diff * denom)
        exps = [(p, int(c * denom)) for p, c in self.logs]
        size = abs(r0) + sum(abs(a) * p.bit_length() for p, a in exps)
        if size > budget_bits:
            return None
        left = 1 << max(r0, 0)
        right = 1 << max(-r0, 0)
        for p, a in exps:
            if a > 0:
                left *= p**a
            else:
                right *= p ** (-a)
        return (left > right) - (left < right)

    def __str__(self):
        parts = [_fstr(self.rational)] if self.rational or not self.logs else []
        parts += [f"{_fstr(c)}*log2({p})" for p, c in self.logs]
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# Generic entropy notions


def shannon_entropy(d: Dist) -> float:
    return math.fsum(-float(w) * log2_fraction(w) for w in d.weights if w > 0)


def conditional_entropy(joint: Dist) -> float:
    """``H(X|Y)`` for a joint whose points are pairs ``(x, y)``."""
    py = joint.marginal(lambda p: p[1])
    return math.fsum(
        float(w) * (log2_fraction(py[p[1]]) - log2_fraction(w)) for p, w in joint.items() if w > 0
    )


def mutual_information(joint: Dist) -> float:
    """``I(X;Y|Z) = H(X|Z) - H(X|Y,Z)`` for points ``(x, y, z)``."""
    h_x_z = conditional_entropy(joint.marginal(lambda p: (p[0], p[2])))
    h_x_yz = conditional_entropy(joint.marginal(lambda p: (p[0], (p[1], p[2]))))
    return h_x_z - h_x_yz


def vulnerability(d: Dist) -> Fraction:
    return max(d.weights)


def min_entropy(d: Dist) -> float:
    return -log2_fraction(vulnerability(d))


def cond_vulnerability(joint: Dist) -> Fraction:
    """``sum_y max_x mu(x, y)``, the chance of guessing ``X`` once knowing ``Y``."""
    best: dict = {}
    for (x, y), w in joint.items():
        if w > best.get(y, -1):
            best[y] = w
    return sum(best.values(), Fraction(0))


def cond_min_entropy(joint: Dist) -> float:
    return -log2_fraction(cond_vulnerability(joint))


@dataclass(frozen=True)
class RankedPoint:
    point: object
    rank: int
    weight: Fraction


def guess_rank(d: Dist) -> list[RankedPoint]:
    """Points in guessing order: heaviest first, ties in sample-space order."""
    order = sorted(range(len(d.space)), key=lambda i: (-d.weights[i], i))
    return [RankedPoint(d.space[i], r + 1, d.weights[i]) for r, i in enumerate(order)]


def guessing_entropy(d: Dist) -> Fraction:
    return sum((rp.rank * rp.weight for rp in guess_rank(d)), Fraction(0))


def cond_guessing_entropy(joint: Dist) -> Fraction:
    """``sum_y mu(y) G(X | Y=y)`` for points ``(x, y)``."""
    groups: dict = {}
    for (x, y), w in joint.items():
        groups.setdefault(y, []).append(w)
    total = Fraction(0)
    for ws in groups.values():
        ws.sort(reverse=True)
        total += sum((i * w for i, w in enumerate(ws, 1)), Fraction(0))
    return total


# ---------------------------------------------------------------------------
# Program-level plumbing


def joint_space(table: IOTable) -> list[str]:
    return table.joint_space()


def uniform_joint(program) -> Dist:
    return uniform(_table(program).joint_space())


def _weights(table: IOTable, mu: Dist | None) -> list[list[Fraction]]:
    """Weight matrix ``W[i][j]`` of ``mu`` over the table's inputs."""
    nh, nl = table.n_high, table.n_low
    if mu is None:
        w = Fraction(1, nh * nl)
        return [[w] * nl for _ in range(nh)]
    points = {h + l: (i, j) for i, h in enumerate(table.high_space) for j, l in enumerate(table.low_space)}
    W = [[Fraction(0)] * nl for _ in range(nh)]
    for p, w in mu.items():
        if p not in points:
            raise DistributionError(
                f"distribution point {p!r} does not match the program's input space "
                f"({len(next(iter(points)))}-bit h+l strings)"
            )
        i, j = points[p]
        W[i][j] = w
    return W


def _io_joint(table: IOTable, W) -> Dist:
    """Joint over ``(o, h, l)`` induced by input weights ``W``."""
    space, weights = [], []
    codes = table.codes.tolist()
    for i, h in enumerate(table.high_space):
        for j, l in enumerate(table.low_space):
            space.append((codes[i][j], h, l))
            weights.append(W[i][j])
    return Dist(tuple(space), tuple(weights))


def _is_small(table: IOTable) -> bool:
    return len(table) <= DEFINITIONAL_LIMIT


# ---------------------------------------------------------------------------
# Shannon-entropy leakage


def se_uniform_exact(program) -> LogLinear:
    """``H(O|L)`` under the uniform prior as an exact sum of logarithms."""
    t = _table(program)
    n = t.n_high * t.n_low
    terms = [(Fraction(1), t.n_high)]
    for counts in t.column_counts:
        for c in counts.values():
            terms.append((Fraction(-c, n), c))
    return LogLinear.build(terms)


def cond_output_entropy(program, mu: Dist | None = None) -> float:
    """``H(O|L)`` from the input weights, the closed form of SE."""
    t = _table(program)
    if mu is None:
        return se_uniform_exact(t).to_float()
    W = _weights(t, mu)
    codes = t.codes.tolist()
    total = []
    for j in range(t.n_low):
        col: dict[int, Fraction] = {}
        for i in range(t.n_high):
            col[codes[i][j]] = col.get(codes[i][j], Fraction(0)) + W[i][j]
        pl = sum(col.values(), Fraction(0))
        for w in col.values():
            if w > 0:
                total.append(float(w) * (log2_fraction(pl) - log2_fraction(w)))
    return math.fsum(total)


def se(program, mu: Dist | None = None) -> QifValue:
    """``I(O;H|L)`` in bits.

    For tables up to ``DEFINITIONAL_LIMIT`` inputs the mutual information is
    computed from its definition and ``cross_check`` holds ``H(O|L)``; for
    larger tables only the latter is computed.
    """
    t = _table(program)
    closed = cond_output_entropy(t, mu)
    exact_form = se_uniform_exact(t) if mu is None else None
    if _is_small(t):
        value = mutual_information(_io_joint(t, _weights(t, mu)))
        value = max(value, 0.0) if abs(value) < 1e-12 else value
        return QifValue("SE", value, cross_check=closed, log_linear=exact_form)
    return QifValue("SE", closed, log_linear=exact_form)


# ---------------------------------------------------------------------------
# Min-entropy leakage


def _me_ratio(t: IOTable, W) -> Fraction:
    """``V(H|O,L) / V(H|L)``; ME is its logarithm."""
    codes = t.codes.tolist()
    v_l = Fraction(0)
    v_ol = Fraction(0)
    for j in range(t.n_low):
        v_l += max(W[i][j] for i in range(t.n_high))
        best: dict[int, Fraction] = {}
        for i in range(t.n_high):
            c = codes[i][j]
            if W[i][j] > best.get(c, Fraction(-1)):
                best[c] = W[i][j]
        v_ol += sum(best.values(), Fraction(0))
    return v_ol / v_l


def me_definitional(program, mu: Dist | None = None) -> float:
    """``H_inf(H|L) - H_inf(H|O,L)`` via generic conditional vulnerabilities."""
    t = _table(program)
    joint = _io_joint(t, _weights(t, mu))
    hl = joint.marginal(lambda p: (p[1], p[2]))
    h_ol = joint.marginal(lambda p: (p[1], (p[0], p[2])))
    return cond_min_entropy(hl) - cond_min_entropy(h_ol)


def me_uniform_closed(program) -> QifValue:
    """``log(|O_L| / |L|)``, where ``O_L`` is the set of reachable (output, low) pairs."""
    t = _table(program)
    reach = sum(len(c) for c in t.column_counts)
    return _log_value("ME", Fraction(reach, t.n_low))


def me(program, mu: Dist | None = None) -> QifValue:
    t = _table(program)
    if mu is None and not _is_small(t):
        return me_uniform_closed(t)
    ratio = _me_ratio(t, _weights(t, mu))
    check = me_definitional(t, mu) if _is_small(t) else None
    if mu is None:
        check = me_uniform_closed(t).value
    return _log_value("ME", ratio, cross_check=check)


# ---------------------------------------------------------------------------
# Guessing-entropy leakage


def ge_definitional(program, mu: Dist | None = None) -> Fraction:
    """``G(H|L) - G(H|O,L)`` via generic conditional guessing entropies."""
    t = _table(program)
    joint = _io_joint(t, _weights(t, mu))
    hl = joint.marginal(lambda p: (p[1], p[2]))
    h_ol = joint.marginal(lambda p: (p[1], (p[0], p[2])))
    return cond_guessing_entropy(hl) - cond_guessing_entropy(h_ol)


def ge_uniform_closed(program) -> QifValue:
    """``|H|/2 - sum |H_{o,l}|^2 / (2 |H| |L|)`` under the uniform prior."""
    t = _table(program)
    sq = sum(c * c for counts in t.column_counts for c in counts.values())
    return _rational_value("GE", Fraction(t.n_high, 2) - Fraction(sq, 2 * t.n_high * t.n_low))


def _ge_weights(t: IOTable, W) -> Fraction:
    codes = t.codes.tolist()
    total = Fraction(0)
    for j in range(t.n_low):
        col = sorted((W[i][j] for i in range(t.n_high)), reverse=True)
        total += sum((k * w for k, w in enumerate(col, 1)), Fraction(0))
        groups: dict[int, list] = {}
        for i in range(t.n_high):
            groups.setdefault(codes[i][j], []).append(W[i][j])
        for ws in groups.values():
            ws.sort(reverse=True)
            total -= sum((k * w for k, w in enumerate(ws, 1)), Fraction(0))
    return total


def ge(program, mu: Dist | None = None) -> QifValue:
    t = _table(program)
    closed = ge_uniform_closed(t) if mu is None else None
    if mu is None and not _is_small(t):
        return closed
    exact = ge_definitional(t, mu) if _is_small(t) else _ge_weights(t, _weights(t, mu))
    check = None if closed is None else closed.value
    return _rational_value("GE", exact, cross_check=check)


def ge_columns(program) -> list[Fraction]:
    """``GE[U ⊗ point(l)]`` for each low input ``l``, by the per-column closed form."""
    t = _table(program)
    n = t.n_high
    return [
        Fraction(n, 2) - Fraction(sum(c * c for c in counts.values()), 2 * n)
        for counts in t.column_counts
    ]


# ---------------------------------------------------------------------------
# Belief-based leakage


def preimage_mass(program, e: Experiment) -> Fraction:
    t = _table(program)
    if set(e.belief.space) != set(t.high_space):
        raise DistributionError("belief is not over the program's high inputs")
    j = t.low_index(e.l)
    col = t.codes[:, j].tolist()
    target = col[t.high_index(e.h)]
    return sum((e.belief[h] for h, c in zip(t.high_space, col) if c == target), Fraction(0))


def be_definitional(program, e: Experiment) -> float:
    """``D(mu -> point(h)) - D(mu|o -> point(h))`` with relative entropies."""
    t = _table(program)
    o = t.output(e.h, e.l)
    target = point_mass(e.h, e.belief.space)
    revised = posterior(e.belief, t, e.l, o)
    return relative_entropy(e.belief, target) - relative_entropy(revised, target)


def be(program, e: Experiment) -> QifValue:
    """Belief-based leakage, ``-log`` of the belief mass of the observed preimage."""
    t = _table(program)
    mass = preimage_mass(t, e)
    check = be_definitional(t, e)
    return _log_value("BE", 1 / mass, cross_check=check)


def be_uniform_all(program) -> list[tuple[str, str, QifValue]]:
    """BE of every experiment with the uniform belief, as ``(h, l, value)``."""
    t = _table(program)
    out = []
    for j, l in enumerate(t.low_space):
        counts = t.column_counts[j]
        col = t.codes[:, j].tolist()
        for h, c in zip(t.high_space, col):
            out.append((h, l, _log_value("BE", Fraction(t.n_high, counts[c]))))
    return out


# ---------------------------------------------------------------------------
# Channel capacity and its relatives


def output_counts(program) -> list[int]:
    return [len(c) for c in _table(program).column_counts]


def cc(program, measure: str = "CC") -> QifValue:
    """``max_l log |outputs at l|``, with the first maximising low input."""
    t = _table(program)
    counts = output_counts(t)
    best = max(counts)
    j = counts.index(best)
    return _log_value(measure, Fraction(best), witness_low=t.low_space[j])


def mecc(program) -> QifValue:
    """Min-entropy channel capacity, which coincides with CC."""
    return cc(program, measure="MECC")


def gecc(program) -> QifValue:
    """``max over l`` of ``GE[U ⊗ point(l)]``."""
    t = _table(program)
    cols = ge_columns(t)
    best = max(cols)
    j = cols.index(best)
    return _rational_value("GECC", best, witness_low=t.low_space[j])


def secc(program) -> QifValue:
    """Shannon channel capacity equals CC for deterministic programs."""
    return cc(program, measure="SECC")


MEASURES = ("SE", "ME", "GE", "CC", "MECC", "GECC")


def measure(name: str, program, mu: Dist | None = None) -> QifValue:
    name = name.upper()
    if name == "SE":
        return se(program, mu)
    if name == "ME":
        return me(program, mu)
    if name == "GE":
        return ge(program, mu)
    if name == "CC":
        return cc(program)
    if name == "MECC":
        return mecc(program)
    if name == "GECC":
        return gecc(program)
    raise QifError(f"unknown measure {name!r}; choose from {', '.join(MEASURES)} or BE")
