"""Self-composition and k-safety counterexamples.

A k-fold self-composition runs k copies of a program side by side, each
copy with its own renamed high variables and its own working copy of every
low variable, all copies starting from the same low inputs.  The channel
capacity bound ``CC <= q`` becomes the safety assertion that among
``floor(2**q) + 1`` copies some two produce the same output.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .boolprog import (
    DEFAULT_CAP,
    Assign,
    Formula,
    IOTable,
    Program,
    Valuation,
    Var,
    _eval_vec,
    _exec_vec,
    _table,
    conj,
    disj,
    format_program,
    iff,
    input_bits,
    parse_program_with_assertion,
    rename_stmt,
    seq,
)
from .bounding import decide_cc_bound, floor_pow2, parse_q
from .errors import CapExceededError, NotApplicableError, QifError
from .measures import QifValue, _fstr, cc, ge_uniform_closed


@dataclass(frozen=True)
class ComposedProgram:
    copies: int
    base: Program
    program: Program
    assertion: Formula | None
    copy_highs: tuple[tuple[str, ...], ...]
    copy_outputs: tuple[tuple[str, ...], ...]

    @property
    def width(self) -> int:
        return self.program.width

    def to_text(self) -> str:
        return format_program(self.program, self.assertion)

    def with_assertion(self, assertion: Formula) -> ComposedProgram:
        return ComposedProgram(
            self.copies, self.base, self.program, assertion, self.copy_highs, self.copy_outputs
        )


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def self_compose_k(program: Program, k: int, cap: int | None = DEFAULT_CAP) -> ComposedProgram:
    """``k`` renamed copies of ``program`` sharing its low inputs, without an assertion."""
    if k < 1:
        raise QifError("need at least one copy")
    width = k * len(program.high) + len(program.low_inputs)
    if cap is not None and width > cap:
        raise CapExceededError(width, cap, what=f"{k}-fold self-composition")
    taken = set(program.high) | set(program.low)
    highs, lows, bodies, copy_highs, copy_outputs = [], [], [], [], []
    for i in range(1, k + 1):
        mapping = {v: _fresh(f"{v}__{i}", taken) for v in program.high + program.low}
        init = [Assign(mapping[v], Var(v)) for v in program.low_inputs]
        bodies += init + [rename_stmt(program.body, mapping)]
        copy_highs.append(tuple(mapping[v] for v in program.high))
        copy_outputs.append(tuple(mapping[v] for v in program.low))
        highs += copy_highs[-1]
        lows += copy_outputs[-1]
    composed = Program(tuple(highs), program.low_inputs + tuple(lows), seq(*bodies))
    return ComposedProgram(k, program, composed, None, tuple(copy_highs), tuple(copy_outputs))


def outputs_equal(c: ComposedProgram, i: int, j: int) -> Formula:
    return conj(*(iff(Var(a), Var(b)) for a, b in zip(c.copy_outputs[i], c.copy_outputs[j])))


def self_compose_cc(program: Program, q, cap: int | None = DEFAULT_CAP) -> ComposedProgram:
    """Composition whose assertion holds everywhere iff ``CC(program) <= q``."""
    n = floor_pow2(parse_q(q)) + 1
    c = self_compose_k(program, n, cap=cap)
    pairs = [outputs_equal(c, i, j) for i in range(n) for j in range(i + 1, n)]
    return c.with_assertion(disj(*pairs))


def noninterference_composition(program: Program, cap: int | None = DEFAULT_CAP) -> ComposedProgram:
    """Two copies asserting equal outputs: holds iff the program is non-interferent."""
    c = self_compose_k(program, 2, cap=cap)
    return c.with_assertion(outputs_equal(c, 0, 1))


@dataclass(frozen=True)
class AssertionResult:
    holds: bool
    counterexample: Valuation | None = None
    checked: int = 0

    def __bool__(self):
        return self.holds


def check_assertion(
    c: ComposedProgram, cap: int | None = DEFAULT_CAP, chunk_bits: int = 18
) -> AssertionResult:
    """Evaluate the assertion on every input; report the first violation."""
    if c.assertion is None:
        raise QifError("composed program has no assertion")
    p = c.program
    inputs = p.input_vars
    width = len(inputs)
    if cap is not None and width > cap:
        raise CapExceededError(width, cap, what="composed input space")
    total = 1 << width
    others = [v for v in p.low if v not in p.low_inputs]
    for start in range(0, total, 1 << chunk_bits):
        stop = min(total, start + (1 << chunk_bits))
        env = {name: np.False_ for name in others}
        env.update(zip(inputs, input_bits(width, start, stop)))
        env = _exec_vec(p.body, env)
        ok = np.broadcast_to(_eval_vec(c.assertion, env, {}), (stop - start,))
        bad = np.flatnonzero(~ok)
        if len(bad):
            idx = start + int(bad[0])
            return AssertionResult(False, Valuation.from_index(inputs, idx), idx + 1)
    return AssertionResult(True, None, total)


def serialize(c: ComposedProgram) -> str:
    return c.to_text()


def parse_composed(text: str) -> tuple[Program, Formula | None]:
    return parse_program_with_assertion(text)


# ---------------------------------------------------------------------------
# Counterexample trace sets


@dataclass(frozen=True)
class CounterexampleSet:
    problem: str
    q: Fraction
    low: str
    traces: tuple[tuple[str, str], ...]
    value: QifValue | None = None

    def as_table(self) -> IOTable:
        """The smallest semantics containing exactly these traces."""
        return IOTable.from_traces((h, self.low, o) for h, o in self.traces)

    def to_json(self) -> dict:
        out = {
            "problem": self.problem,
            "q": _fstr(self.q),
            "low": self.low,
            "traces": [{"h": h, "o": o} for h, o in self.traces],
        }
        if self.value is not None:
            out["value"] = self.value.to_json()
        return out

    def __len__(self):
        return len(self.traces)


def cc_counterexample(program, q) -> CounterexampleSet:
    """``floor(2**q) + 1`` traces at one low input with pairwise distinct outputs.

    The low input is the one maximising the output count; for each new
    output, the first high input in canonical order producing it is taken.
    """
    q = parse_q(q)
    t = _table(program)
    if decide_cc_bound(t, q).in_bound:
        raise NotApplicableError(f"CC <= {_fstr(q)} holds, so no counterexample exists")
    need = floor_pow2(q) + 1
    low = cc(t).witness_low
    j = t.low_index(low)
    seen: set[int] = set()
    traces = []
    for h, code in zip(t.high_space, t.codes[:, j].tolist()):
        if code not in seen:
            seen.add(code)
            traces.append((h, t.label(code)))
            if len(traces) == need:
                break
    ce = CounterexampleSet("CC", q, low, tuple(traces))
    return CounterexampleSet("CC", q, low, ce.traces, cc(ce.as_table()))


def ge_size_bound(q) -> int:
    """Trace count within which a GE counterexample always exists."""
    q = parse_q(q)
    fq = math.floor(q)
    return math.floor(Fraction((fq + 1) ** 2) / (fq + 1 - q)) + 1


def _min_square_classes(caps: Sequence[int], k: int) -> list[int] | None:
    """Class sizes summing to ``k`` within ``caps`` that minimise the sum of squares."""
    if k > sum(caps):
        return None
    sizes = [0] * len(caps)
    for _ in range(k):
        best = min((s, i) for i, s in enumerate(sizes) if s < caps[i])[1]
        sizes[best] += 1
    return sizes


def ge_counterexample(program, q) -> CounterexampleSet:
    """Smallest trace subset whose own uniform GE exceeds ``q``.

    GE under the uniform prior depends only on how many traces share each
    output, so for each size the best subset spreads its traces as evenly
    as possible over the outputs; sizes are tried in increasing order.
    """
    q = parse_q(q)
    t = _table(program)
    if t.n_low != 1:
        raise NotApplicableError("GE counterexamples are built for programs without low inputs")
    if ge_uniform_closed(t).exact <= q:
        raise NotApplicableError(f"GE <= {_fstr(q)} holds, so no counterexample exists")
    counts = t.column_counts[0]
    codes = sorted(counts)
    caps = [counts[c] for c in codes]
    for k in range(2, t.n_high + 1):
        sizes = _min_square_classes(caps, k)
        ge_k = Fraction(k, 2) - Fraction(sum(s * s for s in sizes), 2 * k)
        if ge_k > q:
            break
    else:  # unreachable: the whole table already exceeds q
        raise QifError("no GE counterexample found")
    want = dict(zip(codes, sizes))
    traces = []
    for h, code in zip(t.high_space, t.codes[:, 0].tolist()):
        if want.get(code, 0) > 0:
            want[code] -= 1
            traces.append((h, t.label(code)))
    ce = CounterexampleSet("GE", q, t.low_space[0], tuple(traces))
    return CounterexampleSet("GE", q, ce.low, ce.traces, ge_uniform_closed(ce.as_table()))
