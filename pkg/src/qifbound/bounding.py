"""Deciding whether a program's leakage stays within a bound ``q``.

Every problem is answered with the ``<= q`` reading.  Whenever the measured
quantity is ``log2`` of a rational, the comparison is done on big integers
(``r <= 2**(a/b)`` iff ``r.num**b <= 2**a * r.den**b``); guessing entropy is
compared as a rational.  Shannon leakage alone needs real arithmetic and
goes through a precision ladder that never guesses: when it cannot separate
the value from ``q`` it says so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .boolprog import _table
from .dist import Belief, Dist, Experiment, to_fraction, uniform
from .errors import QifError
from .measures import (
    QifValue,
    _fstr,
    _log_value,
    cc,
    ge_uniform_closed,
    gecc,
    me_uniform_closed,
    preimage_mass,
    se,
    se_uniform_exact,
)

PROBLEMS = ("SE_U", "ME_U", "GE_U", "CC", "BE1", "BE2", "SECC", "MECC", "GECC", "BE1CC", "BE2CC")

EXACT_INTEGER = "exact-integer"
EXACT_RATIONAL = "exact-rational"
FLOAT_GUARDED = "float-guarded"
NONINTERFERENCE = "noninterference-equivalence"

EPSILON = 1e-9
LADDER = (128, 256)
EXACT_BUDGET_BITS = 1 << 23


def parse_q(text) -> Fraction:
    """Exact non-negative rational from ``"a/b"``, a decimal string or a number."""
    try:
        q = to_fraction(text)
    except (QifError, ValueError, OverflowError):
        raise QifError(f"bound {text!r} is not a rational number") from None
    if q < 0:
        raise QifError(f"bound must be non-negative, got {text!r}")
    return q


def log2_le(r: Fraction, q: Fraction) -> bool:
    """Exact test of ``log2(r) <= q`` for positive rational ``r``."""
    r, q = Fraction(r), Fraction(q)
    if r <= 0:
        raise ValueError("log2 of a non-positive number")
    if q < 0:
        raise ValueError("bound must be non-negative")
    if r <= 1:
        return True
    # log2(r) < bit_length(ceil(r)), so large bounds need no big powers
    if q >= (r.numerator // r.denominator + 1).bit_length():
        return True
    a, b = q.numerator, q.denominator
    return r.numerator**b <= (r.denominator**b) << a


def floor_pow2(q) -> int:
    """Largest integer ``m`` with ``m <= 2**q``, found by integer bisection."""
    q = Fraction(q)
    if q < 0:
        raise ValueError("floor_pow2 needs q >= 0")
    a, b = q.numerator, q.denominator
    lo, hi = 1, 1 << (a // b + 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid**b <= 1 << a:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class BoundDecision:
    problem: str
    q: Fraction
    in_bound: bool | None
    method: str
    value: QifValue | None = None
    margin: float | None = None
    note: str | None = None
    ladder: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.method in (EXACT_INTEGER, EXACT_RATIONAL) and self.in_bound is None:
            raise QifError("an exact method cannot be indeterminate")

    @property
    def indeterminate(self) -> bool:
        return self.in_bound is None

    def to_json(self) -> dict:
        return {
            "problem": self.problem,
            "q": _fstr(self.q),
            "inBound": self.in_bound,
            "method": self.method,
            "value": None if self.value is None else self.value.to_json(),
            "margin": None if self.margin is None else float(f"{self.margin:.12g}"),
            "note": self.note,
        }

    def __str__(self):
        verdict = {True: "in bound", False: "out of bound", None: "indeterminate"}[self.in_bound]
        text = f"{self.problem} <= {_fstr(self.q)}: {verdict} [{self.method}]"
        if self.value is not None:
            text += f"  {self.value}"
        if self.note:
            text += f"  ({self.note})"
        return text


# ---------------------------------------------------------------------------
# Non-interference


def noninterferent_at(program, l=None) -> bool:
    """True when every high input yields the same output at low input ``l``."""
    t = _table(program)
    return len(t.column_counts[t.low_index(l)]) == 1


def noninterferent(program) -> bool:
    t = _table(program)
    return all(len(c) == 1 for c in t.column_counts)


def interference_witness(program) -> tuple[str, str, str] | None:
    """``(l, h1, h2)`` with different outputs, or ``None`` when non-interferent."""
    t = _table(program)
    for j, l in enumerate(t.low_space):
        col = t.codes[:, j]
        diff = (col != col[0]).nonzero()[0]
        if len(diff):
            return l, t.high_space[0], t.high_space[int(diff[0])]
    return None


# ---------------------------------------------------------------------------
# Individual deciders


def _check_q(q) -> Fraction:
    return parse_q(q)


def decide_cc_bound(program, q, problem: str = "CC") -> BoundDecision:
    """``max_l |outputs at l| <= 2**q``; also answers SECC and MECC."""
    q = _check_q(q)
    value = cc(program, measure={"SECC": "SECC", "MECC": "MECC"}.get(problem, "CC"))
    return BoundDecision(problem, q, log2_le(value.log_of, q), EXACT_INTEGER, value)


def decide_me_bound(program, q) -> BoundDecision:
    """``|O_L| <= 2**q * |L|`` for the uniform prior."""
    q = _check_q(q)
    value = me_uniform_closed(program)
    return BoundDecision("ME_U", q, log2_le(value.log_of, q), EXACT_INTEGER, value)


def decide_ge_bound(program, q) -> BoundDecision:
    q = _check_q(q)
    value = ge_uniform_closed(program)
    return BoundDecision("GE_U", q, value.exact <= q, EXACT_RATIONAL, value)


def decide_gecc_bound(program, q) -> BoundDecision:
    q = _check_q(q)
    value = gecc(program)
    return BoundDecision("GECC", q, value.exact <= q, EXACT_RATIONAL, value)


def decide_se_bound(program, q, exact_fallback: bool = True, epsilon: float = EPSILON) -> BoundDecision:
    """Shannon leakage under the uniform prior against ``q``.

    A float64 comparison is trusted when the margin exceeds ``epsilon``.
    Otherwise the exact value (a rational plus rational multiples of
    ``log2`` of odd primes) is evaluated at 128 and then 256 bits, each with
    a guard far above that precision's rounding error.  If the gap is still
    unresolved, the comparison is done exactly on big integers unless
    ``exact_fallback`` is off or the integers would exceed the size budget,
    in which case the decision is indeterminate.
    """
    q = _check_q(q)
    value = se(program)
    form = value.log_linear or se_uniform_exact(program)
    v = form.to_float()
    margin = float(q) - v
    trail = ["float64"]
    if abs(margin) > epsilon:
        return BoundDecision("SE_U", q, margin >= 0, FLOAT_GUARDED, value, margin, ladder=tuple(trail))
    if not form.logs:
        return BoundDecision(
            "SE_U", q, form.rational <= q, EXACT_RATIONAL, value,
            note="value is rational", ladder=tuple(trail),
        )
    for prec in LADDER:
        trail.append(f"mpmath-{prec}")
        with mpmath.workprec(prec):
            m = mpmath.mpf(q.numerator) / q.denominator - form.evaluate(prec)
            guard = mpmath.ldexp(1, -(prec - 40))
            if abs(m) > guard:
                return BoundDecision(
                    "SE_U", q, bool(m >= 0), FLOAT_GUARDED, value, float(m),
                    note=f"resolved at {prec}-bit precision", ladder=tuple(trail),
                )
    if exact_fallback:
        trail.append("exact")
        sign = form.compare(q, EXACT_BUDGET_BITS)
        if sign is not None:
            return BoundDecision(
                "SE_U", q, sign <= 0, EXACT_INTEGER, value,
                note="resolved by exact power comparison", ladder=tuple(trail),
            )
    return BoundDecision(
        "SE_U", q, None, FLOAT_GUARDED, value, float(margin),
        note=f"indeterminate after {', '.join(trail)}", ladder=tuple(trail),
    )


def decide_be1(program, experiment: Experiment, q) -> BoundDecision:
    """BE of one experiment: ``1/mass <= 2**q`` for the preimage mass."""
    q = _check_q(q)
    mass = preimage_mass(program, experiment)
    value = _log_value("BE", 1 / mass)
    return BoundDecision("BE1", q, log2_le(value.log_of, q), EXACT_INTEGER, value)


def min_class_mass(program, belief: Dist) -> tuple[Fraction, str, str]:
    """Smallest belief mass of any output class, with a witnessing ``(h, l)``."""
    t = _table(program)
    if set(belief.space) != set(t.high_space):
        raise QifError("belief is not over the program's high inputs")
    best = None
    for j, l in enumerate(t.low_space):
        masses: dict[int, Fraction] = {}
        first: dict[int, str] = {}
        for h, c in zip(t.high_space, t.codes[:, j].tolist()):
            masses[c] = masses.get(c, Fraction(0)) + belief[h]
            first.setdefault(c, h)
        for c, m in masses.items():
            if best is None or m < best[0]:
                best = (m, first[c], l)
    return best


def decide_be2(program, belief: Dist, q) -> BoundDecision:
    """BE of every experiment with ``belief``: the lightest output class decides."""
    q = _check_q(q)
    belief = Belief.of(belief)
    mass, h, l = min_class_mass(program, belief)
    value = _log_value("BE", 1 / mass)
    note = f"largest at h={h!r}, l={l!r}" if mass < 1 else None
    return BoundDecision("BE2", q, log2_le(value.log_of, q), EXACT_INTEGER, value, note=note)


def decide_cclike_belief(program, q, l=None, h=None) -> BoundDecision:
    """Belief leakage over every belief; bounded exactly when non-interferent.

    With ``l`` the question is about that one low input (BE1CC); without it,
    about all of them (BE2CC).  The answer does not depend on ``q``.
    """
    q = _check_q(q)
    if l is None:
        verdict = noninterferent(program)
        return BoundDecision("BE2CC", q, verdict, NONINTERFERENCE, note="equivalent to non-interference")
    verdict = noninterferent_at(program, l)
    return BoundDecision(
        "BE1CC", q, verdict, NONINTERFERENCE, note=f"equivalent to non-interference at l={l!r}"
    )


# ---------------------------------------------------------------------------
# Dispatcher


def _zero_bound(problem, program, q, l=None) -> BoundDecision:
    if problem in ("BE1", "BE1CC"):
        verdict = noninterferent_at(program, l)
    else:
        verdict = noninterferent(program)
    return BoundDecision(
        problem, q, verdict, NONINTERFERENCE,
        note="q = 0: leakage is at most 0 exactly when the program is non-interferent",
    )


def decide(
    problem: str,
    program,
    q,
    belief: Dist | None = None,
    h: str | None = None,
    l: str | None = None,
    exact_fallback: bool = True,
) -> BoundDecision:
    """Decide any of :data:`PROBLEMS` for ``program`` and bound ``q``.

    ``BE1`` needs ``h`` (and ``l`` when the program has low inputs) and uses
    the uniform belief unless ``belief`` is given; ``BE2`` uses ``belief`` or
    the uniform one; ``BE1CC`` needs ``l``.
    """
    problem = problem.upper()
    if problem not in PROBLEMS:
        raise QifError(f"unknown problem {problem!r}; choose from {', '.join(PROBLEMS)}")
    q = parse_q(q)
    t = _table(program)
    if problem in ("BE1", "BE1CC") and l is None:
        if t.n_low != 1:
            raise QifError(f"{problem} needs a low input l")
        l = t.low_space[0]
    if q == 0:
        return _zero_bound(problem, t, q, l)
    if problem == "SE_U":
        return decide_se_bound(t, q, exact_fallback=exact_fallback)
    if problem == "ME_U":
        return decide_me_bound(t, q)
    if problem == "GE_U":
        return decide_ge_bound(t, q)
    if problem in ("CC", "SECC", "MECC"):
        return decide_cc_bound(t, q, problem)
    if problem == "GECC":
        return decide_gecc_bound(t, q)
    if problem in ("BE1", "BE2"):
        mu = Belief.of(belief) if belief is not None else Belief.of(uniform(t.high_space))
        if problem == "BE2":
            return decide_be2(t, mu, q)
        if h is None:
            raise QifError("BE1 needs a high input h")
        return decide_be1(t, Experiment(mu, h, l), q)
    return decide_cclike_belief(t, q, l=l if problem == "BE1CC" else None, h=h)
