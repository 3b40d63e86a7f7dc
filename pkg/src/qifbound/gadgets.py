"""Majority-satisfiability gadgets and dilution families.

Each gadget turns a propositional formula into a boolean program whose
leakage under one measure is monotone in the formula's model count.
Comparing a formula's gadget against the gadget of a reference formula
with exactly ``2**(n-1) + 1`` models therefore decides whether the formula
is satisfied by a strict majority of assignments.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .boolprog import (
    FALSE,
    TRUE,
    And,
    Assign,
    Formula,
    If,
    Not,
    Parser,
    Program,
    Var,
    _eval_vec,
    _synth,
    conj,
    const,
    disj,
    format_formula,
    format_program,
    formula_vars,
    input_bits,
    io_table,
    literal,
    lor,
    seq,
)
from .bounding import (
    BoundDecision,
    decide_be1,
    decide_be2,
    decide_cc_bound,
    decide_ge_bound,
    decide_me_bound,
    decide_se_bound,
    min_class_mass,
)
from .dist import Belief, Experiment, uniform
from .errors import CapExceededError, GadgetError, InconsistentTracesError, ParseError
from .measures import (
    _fstr,
    cc,
    ge_uniform_closed,
    me_uniform_closed,
    preimage_mass,
    se_uniform_exact,
)

ORACLE_CAP = 20
ROUTES = ("SE", "ME", "GE", "CC", "BE1", "BE2")


@dataclass(frozen=True)
class PropFormula:
    variables: tuple[str, ...]
    formula: Formula

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(set(self.variables)) != len(self.variables):
            raise GadgetError("repeated formula variable")
        stray = formula_vars(self.formula) - set(self.variables)
        if stray:
            raise GadgetError(f"formula mentions undeclared variable(s) {sorted(stray)}")

    @property
    def n(self) -> int:
        return len(self.variables)

    def to_text(self) -> str:
        return f"vars {', '.join(self.variables)};\n{format_formula(self.formula)}\n"

    def __str__(self):
        return format_formula(self.formula)


def parse_prop_formula(text: str) -> PropFormula:
    """Parse ``vars x1, ..., xn;`` followed by an expression."""
    p = Parser(text)
    if p.tok.kind != "vars":
        raise ParseError("expected a 'vars' declaration", p.tok.line, p.tok.col)
    names = p.declarations(kinds=("vars",))["vars"]
    f = p.expr()
    p.accept(";")
    if p.tok.kind != "eof":
        raise ParseError(f"unexpected {p.tok.text!r}", p.tok.line, p.tok.col)
    return PropFormula(tuple(names), f)


def default_names(n: int) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(1, n + 1))


# ---------------------------------------------------------------------------
# Model counting


def truth_table(phi: PropFormula, cap: int = ORACLE_CAP) -> np.ndarray:
    """Values of ``phi`` on all assignments, first variable most significant."""
    if phi.n > cap:
        raise CapExceededError(phi.n, cap, what="formula")
    env = dict(zip(phi.variables, input_bits(phi.n, 0, 1 << phi.n)))
    return np.broadcast_to(_eval_vec(phi.formula, env, {}), (1 << phi.n,))


def count_sat(phi: PropFormula, cap: int = ORACLE_CAP) -> int:
    return int(np.count_nonzero(truth_table(phi, cap)))


def majsat_oracle(phi: PropFormula, cap: int = ORACLE_CAP) -> bool:
    """Strict majority: more than ``2**(n-1)`` models."""
    return 2 * count_sat(phi, cap) > (1 << phi.n)


def formula_with_count(n: int, target: int, names: Sequence[str] | None = None) -> PropFormula:
    """Formula satisfied by exactly the first ``target`` assignments.

    It encodes ``index(x) < target`` with a ripple comparator built from the
    least significant bit upwards, so its size is linear in ``n``.
    """
    names = tuple(names) if names is not None else default_names(n)
    if len(names) != n:
        raise GadgetError("need one name per variable")
    if not 0 <= target <= 1 << n:
        raise GadgetError(f"model count {target} is outside 0..{1 << n}")
    if target == 1 << n:
        return PropFormula(names, TRUE)
    less: Formula = FALSE
    for k in range(n - 1, -1, -1):
        bit = (target >> (n - 1 - k)) & 1
        x = Var(names[k])
        # prefixes agree so far; a 1 in target lets x win with a 0 here
        if bit:
            less = Not(x) if less == FALSE else lor(Not(x), less)
        elif less != FALSE:
            less = And(Not(x), less)
    return PropFormula(names, less)


def formula_from_truth_table(names: Sequence[str], bits: int) -> PropFormula:
    """Formula whose value at assignment index ``i`` is bit ``i`` of ``bits``."""
    names = tuple(names)
    n = len(names)
    minterms = []
    for i in range(1 << n):
        if (bits >> i) & 1:
            minterms.append(conj(*(literal(v, bool((i >> (n - 1 - k)) & 1)) for k, v in enumerate(names))))
    return PropFormula(names, disj(*minterms) if minterms else FALSE)


# ---------------------------------------------------------------------------
# Gadgets


def _fresh_names(phi: PropFormula, wanted: Sequence[str], explicit: dict | None) -> list[str]:
    taken = set(phi.variables)
    out = []
    for w in wanted:
        if explicit and w in explicit:
            name = explicit[w]
            if name in taken:
                raise GadgetError(f"variable clash: {name!r} is already used")
        else:
            name = w
            while name in taken:
                name += "_"
        taken.add(name)
        out.append(name)
    return out


def _all_true(names: Sequence[str]) -> Formula:
    return conj(*(Var(v) for v in names))


def _set_all(names: Sequence[str], value: bool) -> list[Assign]:
    return [Assign(v, const(value)) for v in names]


def _copy(targets: Sequence[str], sources: Sequence[str]) -> list[Assign]:
    return [Assign(t, Var(s)) for t, s in zip(targets, sources)]


def gadget_se(phi: PropFormula, names: dict | None = None) -> Program:
    """Shannon-entropy gadget: one output class with ``#SAT + 2**(x-1) - 1`` members.

    Every other input gets an output of its own.  Cases are tried in order:
    ``(H', psi)`` both true, ``H'`` true alone, all of ``H`` true, then a
    split on ``H1``.
    """
    if phi.n < 1:
        raise GadgetError("the Shannon gadget needs at least one formula variable")
    xs = phi.variables
    hp, *rest = _fresh_names(phi, ["Hp", *[f"O{i}" for i in range(1, phi.n + 1)], "Op", "Opp"], names)
    outs, op, opp = rest[: phi.n], rest[phi.n], rest[phi.n + 1]

    def outcome(vec_true: bool, p: bool, pp: bool):
        vec = _set_all(outs, True) if vec_true else _copy(outs, xs)
        return seq(*vec, Assign(op, const(p)), Assign(opp, const(pp)))

    body = If(
        Var(hp),
        If(phi.formula, outcome(True, True, True), outcome(False, True, False)),
        If(
            _all_true(xs),
            outcome(True, False, False),
            If(Var(xs[0]), outcome(True, True, True), outcome(False, False, False)),
        ),
    )
    return Program((hp, *xs), (*outs, op, opp), body)


def gadget_me(phi: PropFormula, names: dict | None = None) -> Program:
    """Min-entropy gadget: ``#SAT(not psi) + 1`` distinct outputs."""
    xs = phi.variables
    hp, of, *outs = _fresh_names(phi, ["Hp", "Of", *[f"O{i}" for i in range(1, phi.n + 1)]], names)
    body = If(
        lor(phi.formula, Var(hp)),
        seq(Assign(of, TRUE), *_set_all(outs, False)) if outs else Assign(of, TRUE),
        seq(Assign(of, FALSE), *_copy(outs, xs)) if outs else Assign(of, FALSE),
    )
    return Program((*xs, hp), (of, *outs), body)


def gadget_ge(phi: PropFormula, names: dict | None = None) -> Program:
    """Guessing-entropy gadget ``O := psi || H'``."""
    hp, o = _fresh_names(phi, ["Hp", "O"], names)
    return Program((*phi.variables, hp), (o,), Assign(o, lor(phi.formula, Var(hp))))


def gadget_be(phi: PropFormula, names: dict | None = None) -> Program:
    """Belief gadget: a single bit that is true for ``#SAT + 2**(x-1) - 1`` inputs."""
    if phi.n < 2:
        raise GadgetError("the belief gadget needs at least two formula variables")
    xs = phi.variables
    hp, hpp, o = _fresh_names(phi, ["Hp", "Hpp", "O"], names)
    body = If(
        Var(hp),
        If(
            Var(hpp),
            If(phi.formula, Assign(o, TRUE), Assign(o, FALSE)),
            If(
                _all_true(xs),
                Assign(o, FALSE),
                If(Var(xs[0]), Assign(o, TRUE), Assign(o, FALSE)),
            ),
        ),
        Assign(o, FALSE),
    )
    return Program((hp, hpp, *xs), (o,), body)


def be_designated_high(program: Program) -> str:
    """High input with ``H'`` true, ``H''`` false, ``H1`` true and the rest false."""
    width = len(program.high)
    return "101" + "0" * (width - 3)


GADGETS = {"SE": gadget_se, "ME": gadget_me, "GE": gadget_ge, "CC": gadget_me, "BE1": gadget_be, "BE2": gadget_be}


def gadget(route: str, phi: PropFormula) -> Program:
    route = route.upper()
    if route not in GADGETS:
        raise GadgetError(f"unknown route {route!r}; choose from {', '.join(ROUTES)}")
    return GADGETS[route](phi)


# ---------------------------------------------------------------------------
# End-to-end reductions


@dataclass(frozen=True)
class Threshold:
    value: Fraction
    symbolic: str


@dataclass(frozen=True)
class ReductionRun:
    formula: PropFormula
    route: str
    threshold: Threshold
    gadget: Program
    decision: BoundDecision
    verdict: bool
    oracle_verdict: bool | None
    count: int | None = None

    @property
    def agrees(self) -> bool:
        return self.oracle_verdict is None or self.verdict == self.oracle_verdict

    def to_json(self) -> dict:
        return {
            "route": self.route,
            "formula": self.formula.to_text().strip(),
            "n": self.formula.n,
            "threshold": _fstr(self.threshold.value),
            "thresholdSymbolic": self.threshold.symbolic,
            "gadget": format_program(self.gadget),
            "decision": self.decision.to_json(),
            "verdict": self.verdict,
            "oracleVerdict": self.oracle_verdict,
            "count": self.count,
        }


def _log2_exact(r: Fraction) -> Fraction:
    """``log2(r)`` for an integral power of two (possibly negative)."""
    num, den = r.numerator, r.denominator
    if num & (num - 1) or den & (den - 1):
        raise GadgetError(f"reference threshold log({r}) is not rational")
    return Fraction(num.bit_length() - den.bit_length())


_REFERENCE_CACHE: dict[tuple[str, int], Threshold] = {}


def reference_formula(n: int) -> PropFormula:
    return formula_with_count(n, (1 << (n - 1)) + 1)


def reference_threshold(route: str, n: int) -> Threshold:
    """Leakage of the route's gadget on a formula with ``2**(n-1) + 1`` models."""
    route = route.upper()
    key = (route, n)
    if key in _REFERENCE_CACHE:
        return _REFERENCE_CACHE[key]
    psi = reference_formula(n)
    table = io_table(gadget(route, psi))
    if route == "SE":
        form = se_uniform_exact(table)
        if form.logs:
            raise GadgetError(f"reference Shannon leakage {form} is not rational")
        th = Threshold(form.rational, str(form))
    elif route == "ME":
        r = me_uniform_closed(table).log_of
        th = Threshold(_log2_exact(r), f"log({_fstr(r)})")
    elif route == "CC":
        r = cc(table).log_of
        th = Threshold(_log2_exact(r), f"log({_fstr(r)})")
    elif route == "GE":
        v = ge_uniform_closed(table).exact
        th = Threshold(v, _fstr(v))
    else:
        if route == "BE1":
            h = be_designated_high(table.program)
            mass = preimage_mass(table, Experiment(Belief.of(uniform(table.high_space)), h))
        else:
            mass = min_class_mass(table, uniform(table.high_space))[0]
        th = Threshold(_log2_exact(1 / mass), f"log({_fstr(1 / mass)})")
    _REFERENCE_CACHE[key] = th
    return th


def decide_majsat_via(route: str, phi: PropFormula, check: bool = True) -> ReductionRun:
    """Decide majority satisfiability of ``phi`` through one bounding problem."""
    route = route.upper()
    if route not in ROUTES:
        raise GadgetError(f"unknown route {route!r}; choose from {', '.join(ROUTES)}")
    if phi.n < 2:
        raise GadgetError("reductions need a formula over at least two variables")
    th = reference_threshold(route, phi.n)
    prog = gadget(route, phi)
    table = io_table(prog)
    q = th.value
    if route == "SE":
        d = decide_se_bound(table, q)
    elif route == "ME":
        d = decide_me_bound(table, q)
    elif route == "CC":
        d = decide_cc_bound(table, q)
    elif route == "GE":
        d = decide_ge_bound(table, q)
    elif route == "BE1":
        belief = Belief.of(uniform(table.high_space))
        d = decide_be1(table, Experiment(belief, be_designated_high(prog)), q)
    else:
        d = decide_be2(table, uniform(table.high_space), q)
    if d.in_bound is None:
        raise GadgetError(f"{route} decision was indeterminate")
    count = count_sat(phi) if check else None
    oracle = (2 * count > (1 << phi.n)) if check else None
    return ReductionRun(phi, route, th, prog, d, bool(d.in_bound), oracle, count)


# ---------------------------------------------------------------------------
# Dilution families


def dilution_family(
    traces: Iterable[tuple[str, str, str]], extra_low_bits: int, default: str | None = None
) -> Program:
    """Program containing ``traces`` whose other inputs all give ``default``.

    ``traces`` are ``(h, l, o)`` bitstrings.  The program has highs ``H*``,
    low inputs ``L*`` followed by ``extra_low_bits`` fresh low inputs
    ``E*``, and output lows ``O*``.  When every ``E`` bit is false it
    reproduces the traces (``O`` gets ``o`` at ``(h, l)``); everything else
    maps to ``default``, which defaults to the first trace's output.  Low
    inputs are never modified, so the observed output is ``(l, e, o)``.
    """
    traces = list(traces)
    if not traces:
        raise InconsistentTracesError("empty trace set")
    table: dict[tuple[str, str], str] = {}
    for h, l, o in traces:
        if table.setdefault((h, l), o) != o:
            raise InconsistentTracesError(f"input ({h!r}, {l!r}) has two outputs")
    widths = {tuple(map(len, tr)) for tr in traces}
    if len(widths) != 1:
        raise InconsistentTracesError("traces have inconsistent widths")
    wh, wl, wo = widths.pop()
    if wo == 0:
        raise InconsistentTracesError("outputs must have at least one bit")
    default = traces[0][2] if default is None else default
    if len(default) != wo:
        raise InconsistentTracesError("default output has the wrong width")
    hs = [f"H{i}" for i in range(1, wh + 1)]
    ls = [f"L{i}" for i in range(1, wl + 1)]
    es = [f"E{i}" for i in range(1, extra_low_bits + 1)]
    os_ = [f"O{i}" for i in range(1, wo + 1)]
    order = ls + hs
    codes = np.empty(1 << (wl + wh), dtype=np.int64)
    for idx in range(1 << (wl + wh)):
        bits = format(idx, f"0{wl + wh}b") if wl + wh else ""
        l, h = bits[:wl], bits[wl:]
        codes[idx] = int(table.get((h, l), default), 2)
    inner = _synth(order, len(ls), codes, os_)
    if es:
        fallback = seq(*(Assign(o, const(b == "1")) for o, b in zip(os_, default)))
        body = If(conj(*(literal(e, False) for e in es)), inner, fallback)
    else:
        body = inner
    return Program(tuple(hs), tuple(ls + es + os_), body)


def dilution_me_bound(n_traces: int, low_bits: int) -> float:
    """``log((|T| + 2**t) / 2**t)``, an upper bound on the family's uniform ME."""
    return math.log2((n_traces + (1 << low_bits)) / (1 << low_bits))
