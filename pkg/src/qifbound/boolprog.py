"""Loop-free boolean programs: syntax, parsing, printing and semantics.

Formulas are kept in the core connective set ``true / var / and / not``;
``false``, ``||``, ``==>`` and ``==`` are sugar that the constructors below
expand on the spot.  Statements are assignments, sequences and two-armed
conditionals.

Two independent semantics are provided.  :func:`run` walks the AST for a
single input, and :func:`io_table` evaluates the body over the whole input
space at once with numpy bit-vectors.  :func:`weakest_precondition` gives the
third, predicate-transformer view, and the test suite checks all three
against each other.

The observable output of a program is the final value of every low
variable in declaration order.  A low variable is an *input* only when its
initial value can be read (it is live on entry), so a low variable that the
program initialises before use is output-only.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from .errors import (
    CapExceededError,
    DuplicateDeclarationError,
    InconsistentTracesError,
    MissingVariableError,
    ParseError,
    QifError,
    UndeclaredVariableError,
)

DEFAULT_CAP = 24

# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True, eq=True)
class Const:
    """The constant ``true``.  ``false`` is represented as ``Not(Const())``."""

    def __repr__(self):
        return "TRUE"


@dataclass(frozen=True, eq=True)
class Var:
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, eq=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=True)
class Not:
    operand: Formula


Formula = Const | Var | And | Not

TRUE = Const()
FALSE = Not(TRUE)


def neg(f: Formula) -> Formula:
    return Not(f)


def conj(*fs: Formula) -> Formula:
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def lor(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def disj(*fs: Formula) -> Formula:
    if not fs:
        return FALSE
    out = fs[0]
    for f in fs[1:]:
        out = lor(out, f)
    return out


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def iff(a: Formula, b: Formula) -> Formula:
    return And(implies(a, b), implies(b, a))


def const(value: bool) -> Formula:
    return TRUE if value else FALSE


def literal(name: str, value: bool) -> Formula:
    return Var(name) if value else Not(Var(name))


def formula_vars(f: Formula) -> set[str]:
    seen: set[int] = set()
    names: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if id(g) in seen:
            continue
        seen.add(id(g))
        if isinstance(g, Var):
            names.add(g.name)
        elif isinstance(g, And):
            stack.append(g.left)
            stack.append(g.right)
        elif isinstance(g, Not):
            stack.append(g.operand)
    return names


def substitute(f: Formula, name: str, replacement: Formula) -> Formula:
    """Return ``f[replacement/name]``, sharing untouched subterms."""
    memo: dict[int, Formula] = {}

    def go(g):
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, Var):
            out = replacement if g.name == name else g
        elif isinstance(g, And):
            left, right = go(g.left), go(g.right)
            out = g if (left is g.left and right is g.right) else And(left, right)
        elif isinstance(g, Not):
            inner = go(g.operand)
            out = g if inner is g.operand else Not(inner)
        else:
            out = g
        memo[key] = out
        return out

    return go(f)


def rename_formula(f: Formula, mapping: Mapping[str, str]) -> Formula:
    memo: dict[int, Formula] = {}

    def go(g):
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, Var):
            out = Var(mapping.get(g.name, g.name))
        elif isinstance(g, And):
            out = And(go(g.left), go(g.right))
        elif isinstance(g, Not):
            out = Not(go(g.operand))
        else:
            out = g
        memo[key] = out
        return out

    return go(f)


def eval_formula(f: Formula, valuation: Valuation | Mapping[str, bool]) -> bool:
    """Evaluate ``f`` under ``valuation`` (a :class:`Valuation` or a mapping)."""
    memo: dict[int, bool] = {}

    def go(g):
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, Const):
            out = True
        elif isinstance(g, Var):
            try:
                out = bool(valuation[g.name])
            except KeyError:
                raise MissingVariableError(
                    f"valuation does not assign variable {g.name!r}"
                ) from None
        elif isinstance(g, And):
            out = go(g.left) and go(g.right)
        else:
            out = not go(g.operand)
        memo[key] = out
        return out

    return go(f)


def simplify(f: Formula) -> Formula:
    """Constant-fold and drop double negations.  Used for display only."""
    memo: dict[int, Formula] = {}

    def go(g):
        key = id(g)
        if key in memo:
            return memo[key]
        if isinstance(g, And):
            a, b = go(g.left), go(g.right)
            if a == FALSE or b == FALSE:
                out = FALSE
            elif a == TRUE:
                out = b
            elif b == TRUE or a == b:
                out = a
            else:
                out = And(a, b)
        elif isinstance(g, Not):
            a = go(g.operand)
            out = a.operand if isinstance(a, Not) else Not(a)
        else:
            out = g
        memo[key] = out
        return out

    return go(f)


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True, eq=True)
class Assign:
    target: str
    value: Formula


@dataclass(frozen=True, eq=True)
class Seq:
    first: Stmt
    second: Stmt


@dataclass(frozen=True, eq=True)
class If:
    guard: Formula
    then_branch: Stmt
    else_branch: Stmt


Stmt = Assign | Seq | If


def seq(*stmts: Stmt) -> Stmt:
    """Right-nested sequence, the shape the parser produces."""
    if not stmts:
        raise ValueError("empty statement sequence")
    stmts = [s for st in stmts for s in flatten(st)]
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


def flatten(stmt: Stmt) -> list[Stmt]:
    out: list[Stmt] = []
    stack = [stmt]
    while stack:
        s = stack.pop()
        if isinstance(s, Seq):
            stack.append(s.second)
            stack.append(s.first)
        else:
            out.append(s)
    return out


def stmt_vars(stmt: Stmt) -> set[str]:
    names: set[str] = set()
    for s in flatten(stmt):
        if isinstance(s, Assign):
            names.add(s.target)
            names |= formula_vars(s.value)
        else:
            names |= formula_vars(s.guard)
            names |= stmt_vars(s.then_branch)
            names |= stmt_vars(s.else_branch)
    return names


def assignments(stmt: Stmt) -> list[Assign]:
    out = []
    for s in flatten(stmt):
        if isinstance(s, Assign):
            out.append(s)
        else:
            out += assignments(s.then_branch)
            out += assignments(s.else_branch)
    return out


def live_in(stmt: Stmt, live_out: set[str]) -> set[str]:
    """Variables whose initial value may be read (classic backward liveness)."""
    live = set(live_out)
    for s in reversed(flatten(stmt)):
        if isinstance(s, Assign):
            live.discard(s.target)
            live |= formula_vars(s.value)
        else:
            live = (
                live_in(s.then_branch, live)
                | live_in(s.else_branch, live)
                | formula_vars(s.guard)
            )
    return live


def rename_stmt(stmt: Stmt, mapping: Mapping[str, str]) -> Stmt:
    if isinstance(stmt, Assign):
        return Assign(mapping.get(stmt.target, stmt.target), rename_formula(stmt.value, mapping))
    if isinstance(stmt, Seq):
        return seq(*(rename_stmt(s, mapping) for s in flatten(stmt)))
    return If(
        rename_formula(stmt.guard, mapping),
        rename_stmt(stmt.then_branch, mapping),
        rename_stmt(stmt.else_branch, mapping),
    )


# ---------------------------------------------------------------------------
# Valuations


@dataclass(frozen=True)
class Valuation:
    """Total assignment of booleans to an ordered list of variables."""

    names: tuple[str, ...]
    values: tuple[bool, ...]

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("names and values differ in length")

    @classmethod
    def from_bits(cls, names: Sequence[str], bits: str) -> Valuation:
        names = tuple(names)
        if len(bits) != len(names) or set(bits) - {"0", "1"}:
            raise ValueError(f"{bits!r} is not a {len(names)}-bit string")
        return cls(names, tuple(b == "1" for b in bits))

    @classmethod
    def from_index(cls, names: Sequence[str], index: int) -> Valuation:
        names = tuple(names)
        width = len(names)
        return cls(names, tuple(bool((index >> (width - 1 - i)) & 1) for i in range(width)))

    @classmethod
    def from_mapping(cls, names: Sequence[str], mapping: Mapping[str, bool]) -> Valuation:
        names = tuple(names)
        try:
            return cls(names, tuple(bool(mapping[n]) for n in names))
        except KeyError as exc:
            raise MissingVariableError(f"no value for variable {exc.args[0]!r}") from None

    @property
    def bits(self) -> str:
        return "".join("1" if v else "0" for v in self.values)

    @property
    def index(self) -> int:
        return int(self.bits, 2) if self.values else 0

    def __getitem__(self, name: str) -> bool:
        try:
            return self.values[self.names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def __contains__(self, name) -> bool:
        return name in self.names

    def as_dict(self) -> dict[str, bool]:
        return dict(zip(self.names, self.values))

    def project(self, names: Sequence[str]) -> Valuation:
        return Valuation.from_mapping(names, self.as_dict())

    def __str__(self):
        return self.bits


def all_valuations(names: Sequence[str]) -> list[Valuation]:
    names = tuple(names)
    return [Valuation(names, vals) for vals in product((False, True), repeat=len(names))]


def bitstrings(width: int) -> list[str]:
    return [format(i, f"0{width}b") if width else "" for i in range(1 << width)]


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class Program:
    high: tuple[str, ...]
    low: tuple[str, ...]
    body: Stmt

    def __post_init__(self):
        object.__setattr__(self, "high", tuple(self.high))
        object.__setattr__(self, "low", tuple(self.low))
        seen = set()
        for name in self.high + self.low:
            if name in seen:
                raise DuplicateDeclarationError(f"variable {name!r} declared twice")
            seen.add(name)
        if not self.low:
            raise QifError("a program needs at least one low variable")
        undeclared = stmt_vars(self.body) - seen
        if undeclared:
            raise UndeclaredVariableError(
                f"undeclared variable(s): {', '.join(sorted(undeclared))}"
            )

    @cached_property
    def low_inputs(self) -> tuple[str, ...]:
        """Low variables whose initial value can influence the run."""
        live = live_in(self.body, set(self.low))
        return tuple(v for v in self.low if v in live)

    @property
    def input_vars(self) -> tuple[str, ...]:
        return self.high + self.low_inputs

    @property
    def width(self) -> int:
        return len(self.high) + len(self.low_inputs)

    def __str__(self):
        return format_program(self)


# ---------------------------------------------------------------------------
# Weakest preconditions and single runs


def weakest_precondition(body: Stmt, post: Formula) -> Formula:
    """Predicate transformer of the language, with no simplification."""
    out = post
    for s in reversed(flatten(body)):
        if isinstance(s, Assign):
            out = substitute(out, s.target, s.value)
        else:
            out = And(
                implies(s.guard, weakest_precondition(s.then_branch, out)),
                implies(Not(s.guard), weakest_precondition(s.else_branch, out)),
            )
    return out


def characteristic_formula(o: Valuation) -> Formula:
    """Conjunction of literals that holds exactly at ``o``."""
    return conj(*(literal(n, v) for n, v in zip(o.names, o.values)))


def _exec_scalar(stmt: Stmt, state: dict[str, bool]) -> None:
    for s in flatten(stmt):
        if isinstance(s, Assign):
            state[s.target] = eval_formula(s.value, state)
        elif eval_formula(s.guard, state):
            _exec_scalar(s.then_branch, state)
        else:
            _exec_scalar(s.else_branch, state)


def _initial_state(program: Program, h, l) -> dict[str, bool]:
    h = _coerce(h, program.high)
    state = dict.fromkeys(program.low, False)
    state.update(h.as_dict())
    if l is not None:
        if isinstance(l, str):
            names = program.low if len(l) == len(program.low) else program.low_inputs
            l = Valuation.from_bits(names, l)
        lv = l.as_dict() if isinstance(l, Valuation) else dict(l)
        missing = set(program.low_inputs) - set(lv)
        if missing:
            raise MissingVariableError(f"no value for low input(s) {sorted(missing)}")
        state.update({k: bool(v) for k, v in lv.items() if k in program.low})
    elif program.low_inputs:
        raise MissingVariableError(f"no value for low input(s) {list(program.low_inputs)}")
    return state


def _coerce(v, names) -> Valuation:
    if isinstance(v, Valuation):
        return v.project(names) if v.names != tuple(names) else v
    if isinstance(v, str):
        return Valuation.from_bits(names, v)
    return Valuation.from_mapping(names, v)


def run(program: Program, h, l=None) -> Valuation:
    """Execute ``program`` forwards on one input and return the low outputs.

    ``h`` and ``l`` may be :class:`Valuation` objects, mappings or
    bitstrings.  ``l`` may cover either all low variables or just the low
    inputs; values of non-input lows are overwritten before use anyway.
    """
    state = _initial_state(program, h, l)
    _exec_scalar(program.body, state)
    return Valuation(program.low, tuple(state[v] for v in program.low))


# ---------------------------------------------------------------------------
# Vectorised evaluation


def _eval_vec(f: Formula, env: dict, memo: dict):
    key = id(f)
    if key in memo:
        return memo[key]
    if isinstance(f, Const):
        out = np.True_
    elif isinstance(f, Var):
        out = env[f.name]
    elif isinstance(f, And):
        out = _eval_vec(f.left, env, memo) & _eval_vec(f.right, env, memo)
    else:
        out = ~_eval_vec(f.operand, env, memo)
    memo[key] = out
    return out


def _exec_vec(stmt: Stmt, env: dict) -> dict:
    for s in flatten(stmt):
        if isinstance(s, Assign):
            env[s.target] = _eval_vec(s.value, env, {})
            continue
        g = _eval_vec(s.guard, env, {})
        if np.ndim(g) == 0:
            env = _exec_vec(s.then_branch if bool(g) else s.else_branch, env)
            continue
        t_env = _exec_vec(s.then_branch, dict(env))
        e_env = _exec_vec(s.else_branch, dict(env))
        merged = {}
        for name, tv in t_env.items():
            ev = e_env[name]
            merged[name] = tv if tv is ev else np.where(g, tv, ev)
        env = merged
    return env


def input_bits(width: int, start: int, stop: int) -> list[np.ndarray]:
    idx = np.arange(start, stop, dtype=np.int64)
    return [((idx >> (width - 1 - j)) & 1).astype(bool) for j in range(width)]


def evaluate_outputs(
    body: Stmt,
    inputs: Sequence[str],
    outputs: Sequence[str],
    others: Iterable[str] = (),
    cap: int | None = DEFAULT_CAP,
    chunk_bits: int = 20,
) -> np.ndarray:
    """Output codes of ``body`` for every input in canonical order.

    Input index ``i`` sets ``inputs[j]`` to bit ``j`` of ``i`` (first
    variable most significant).  The returned code packs ``outputs`` the
    same way.  Variables in ``others`` start out false.
    """
    width = len(inputs)
    if cap is not None and width > cap:
        raise CapExceededError(width, cap)
    total = 1 << width
    chunk = 1 << chunk_bits
    codes = np.empty(total, dtype=np.int64)
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        env = {name: np.False_ for name in others}
        env.update(zip(inputs, input_bits(width, start, stop)))
        env = _exec_vec(body, env)
        acc = np.zeros(stop - start, dtype=np.int64)
        for name in outputs:
            acc = (acc << 1) | np.broadcast_to(env[name], (stop - start,)).astype(np.int64)
        codes[start:stop] = acc
    return codes


# ---------------------------------------------------------------------------
# Input/output tables


class IOTable:
    """A total deterministic map from (high input, low input) to output.

    Rows are the points of ``high_space`` and columns the points of
    ``low_space``; ``codes[i, j]`` is the output for row ``i`` and column
    ``j``, packed as an integer whose ``out_width``-bit binary spelling is
    the output label.  Tables built by :func:`io_table` keep a reference to
    their program; tables built from trace sets have ``program=None`` and
    may have any finite high space.
    """

    def __init__(
        self,
        high_space: Sequence[str],
        low_space: Sequence[str],
        codes: np.ndarray,
        out_width: int,
        program: Program | None = None,
        high_vars: Sequence[str] | None = None,
        low_vars: Sequence[str] | None = None,
        out_vars: Sequence[str] | None = None,
    ):
        self.high_space = tuple(high_space)
        self.low_space = tuple(low_space)
        self.codes = np.asarray(codes, dtype=np.int64).reshape(
            len(self.high_space), len(self.low_space)
        )
        self.codes.setflags(write=False)
        self.out_width = out_width
        self.program = program
        self.high_vars = tuple(high_vars) if high_vars is not None else None
        self.low_vars = tuple(low_vars) if low_vars is not None else None
        self.out_vars = tuple(out_vars) if out_vars is not None else None
        self._high_pos = {h: i for i, h in enumerate(self.high_space)}
        self._low_pos = {l: j for j, l in enumerate(self.low_space)}

    @classmethod
    def from_traces(cls, traces: Iterable[tuple[str, str, str]]) -> IOTable:
        """Table whose semantics is exactly ``traces`` of ``(h, l, o)`` bitstrings.

        The high space is the set of high inputs appearing in the traces and
        likewise for the low space; every (h, l) combination must be covered
        exactly once.
        """
        traces = list(traces)
        if not traces:
            raise InconsistentTracesError("empty trace set")
        table: dict[tuple[str, str], str] = {}
        for h, l, o in traces:
            prev = table.setdefault((h, l), o)
            if prev != o:
                raise InconsistentTracesError(f"input ({h!r}, {l!r}) has outputs {prev!r} and {o!r}")
        highs = sorted({h for h, _, _ in traces}, key=_bit_key)
        lows = sorted({l for _, l, _ in traces}, key=_bit_key)
        widths = {len(o) for _, _, o in traces}
        if len(widths) != 1:
            raise InconsistentTracesError("outputs have different widths")
        width = widths.pop()
        codes = np.empty((len(highs), len(lows)), dtype=np.int64)
        for i, h in enumerate(highs):
            for j, l in enumerate(lows):
                if (h, l) not in table:
                    raise InconsistentTracesError(
                        f"trace set is not a total table: ({h!r}, {l!r}) missing"
                    )
                o = table[(h, l)]
                codes[i, j] = int(o, 2) if o else 0
        return cls(highs, lows, codes, width)

    @property
    def n_high(self) -> int:
        return len(self.high_space)

    @property
    def n_low(self) -> int:
        return len(self.low_space)

    def __len__(self):
        return self.n_high * self.n_low

    def label(self, code: int) -> str:
        return format(int(code), f"0{self.out_width}b") if self.out_width else ""

    def high_index(self, h) -> int:
        return self._high_pos[h.bits if isinstance(h, Valuation) else h]

    def low_index(self, l) -> int:
        if l is None:
            l = ""
        if isinstance(l, Valuation):
            if self.low_vars is not None and l.names != self.low_vars:
                l = l.project(self.low_vars)
            l = l.bits
        elif not isinstance(l, str):
            l = Valuation.from_mapping(self.low_vars or (), l).bits
        if l not in self._low_pos and self.program is not None and len(l) == len(self.program.low):
            l = Valuation.from_bits(self.program.low, l).project(self.low_vars).bits
        return self._low_pos[l]

    def output(self, h, l=None) -> str:
        return self.label(self.codes[self.high_index(h), self.low_index(l)])

    def rows(self) -> Iterator[tuple[str, str, str]]:
        for i, h in enumerate(self.high_space):
            for j, l in enumerate(self.low_space):
                yield h, l, self.label(self.codes[i, j])

    def column(self, j: int) -> np.ndarray:
        return self.codes[:, j]

    @cached_property
    def column_counts(self) -> tuple[dict[int, int], ...]:
        """Per column, the number of high inputs mapped to each output code."""
        out = []
        for j in range(self.n_low):
            col = self.codes[:, j]
            if col.size > 4096:
                values, counts = np.unique(col, return_counts=True)
                out.append(dict(zip(values.tolist(), counts.tolist())))
            else:
                out.append(dict(Counter(col.tolist())))
        return tuple(out)

    def preimage(self, j: int, code: int) -> list[int]:
        return np.flatnonzero(self.codes[:, j] == code).tolist()

    def joint_space(self) -> list[str]:
        return [h + l for h in self.high_space for l in self.low_space]

    def output_valuation(self, code: int) -> Valuation:
        if self.out_vars is None:
            raise QifError("table has no output variable names")
        return Valuation.from_index(self.out_vars, int(code))

    def __repr__(self):
        return f"IOTable({self.n_high}x{self.n_low}, out_width={self.out_width})"


def _bit_key(s: str):
    return (len(s), s)


def io_table(program: Program, cap: int | None = DEFAULT_CAP, chunk_bits: int = 20) -> IOTable:
    """Exhaustive semantics of ``program`` as an :class:`IOTable`."""
    if cap is not None and program.width > cap:
        raise CapExceededError(program.width, cap)
    others = [v for v in program.low if v not in program.low_inputs]
    codes = evaluate_outputs(
        program.body, program.input_vars, program.low, others, cap=cap, chunk_bits=chunk_bits
    )
    return IOTable(
        bitstrings(len(program.high)),
        bitstrings(len(program.low_inputs)),
        codes,
        len(program.low),
        program=program,
        high_vars=program.high,
        low_vars=program.low_inputs,
        out_vars=program.low,
    )


def _table(program_or_table, cap=DEFAULT_CAP) -> IOTable:
    if isinstance(program_or_table, IOTable):
        return program_or_table
    return io_table(program_or_table, cap=cap)


def restrict(program, l=None, cap: int | None = DEFAULT_CAP) -> dict[str, str]:
    """The program restricted to low input ``l``, as a map ``h -> o``."""
    t = _table(program, cap)
    j = t.low_index(l)
    return {h: t.label(t.codes[i, j]) for i, h in enumerate(t.high_space)}


def output_set(program, l=None, cap: int | None = DEFAULT_CAP) -> set[str]:
    """Outputs reachable at low input ``l`` over all high inputs."""
    t = _table(program, cap)
    return {t.label(c) for c in t.column_counts[t.low_index(l)]}


# ---------------------------------------------------------------------------
# Program synthesis from tables


def _synth(order: Sequence[str], n_lows: int, codes: np.ndarray, outs: Sequence[str], depth=0) -> Stmt:
    # always branch on low inputs so they stay live on entry
    if depth >= n_lows and np.all(codes == codes[0]):
        code = int(codes[0])
        width = len(outs)
        return seq(*(Assign(o, const(bool((code >> (width - 1 - k)) & 1))) for k, o in enumerate(outs)))
    half = len(codes) // 2
    return If(
        Var(order[depth]),
        _synth(order, n_lows, codes[half:], outs, depth + 1),
        _synth(order, n_lows, codes[:half], outs, depth + 1),
    )


def synthesize_program(
    high: Sequence[str],
    low: Sequence[str],
    table: Mapping[tuple[str, str], str] | np.ndarray,
    low_inputs: Sequence[str] | None = None,
) -> Program:
    """Build a program realising ``table``.

    ``table`` maps ``(h_bits, l_bits)`` to output bits over ``low``, or is an
    integer array of shape ``(2**|high|, 2**|low_inputs|)`` of output codes.
    ``low_inputs`` defaults to every low variable.
    """
    high, low = tuple(high), tuple(low)
    low_inputs = tuple(low if low_inputs is None else low_inputs)
    nh, nl = 1 << len(high), 1 << len(low_inputs)
    if isinstance(table, np.ndarray):
        grid = np.asarray(table, dtype=np.int64).reshape(nh, nl)
    else:
        grid = np.empty((nh, nl), dtype=np.int64)
        for i, h in enumerate(bitstrings(len(high))):
            for j, l in enumerate(bitstrings(len(low_inputs))):
                grid[i, j] = int(table[(h, l)], 2)
    # low-major order so the lows are tested first
    flat = grid.T.reshape(-1)
    order = low_inputs + high
    body = _synth(order, len(low_inputs), flat, low)
    return Program(high, low, body)


# ---------------------------------------------------------------------------
# Lexing and parsing

KEYWORDS = {"high", "low", "if", "then", "else", "true", "false", "assert", "vars"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<op>==>|:=|&&|\|\||==|[!(){};,])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "op":
            tokens.append(Token(m.group(), m.group(), line, pos - line_start + 1))
        elif kind == "ident":
            word = m.group()
            tokens.append(Token(word if word in KEYWORDS else "ident", word, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.declared: dict[str, str] = {}

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.tok
        if t.kind != kind:
            found = t.text or "end of input"
            raise ParseError(f"expected {kind!r}, found {found!r}", t.line, t.col)
        return self.advance()

    def accept(self, kind: str) -> bool:
        if self.tok.kind == kind:
            self.advance()
            return True
        return False

    # declarations

    def declarations(self, kinds=("high", "low")) -> dict[str, list[str]]:
        decls = {k: [] for k in kinds}
        while self.tok.kind in kinds:
            kind = self.advance().kind
            while True:
                t = self.expect("ident")
                if t.text in self.declared:
                    raise DuplicateDeclarationError(
                        f"variable {t.text!r} already declared {self.declared[t.text]}", t.line, t.col
                    )
                self.declared[t.text] = kind
                decls[kind].append(t.text)
                if not self.accept(","):
                    break
            self.expect(";")
        return decls

    # statements

    def statements(self) -> Stmt:
        stmts = [self.statement()]
        while self.accept(";"):
            if self.tok.kind in ("eof", "}", "assert"):
                break
            stmts.append(self.statement())
        return seq(*stmts)

    def statement(self) -> Stmt:
        t = self.tok
        if t.kind == "if":
            self.advance()
            guard = self.expr()
            self.expect("then")
            then_branch = self.block()
            self.expect("else")
            else_branch = self.block()
            return If(guard, then_branch, else_branch)
        if t.kind == "ident":
            self.advance()
            self.check_declared(t)
            self.expect(":=")
            return Assign(t.text, self.expr())
        found = t.text or "end of input"
        raise ParseError(f"expected a statement, found {found!r}", t.line, t.col)

    def block(self) -> Stmt:
        if self.accept("{"):
            body = self.statements()
            self.expect("}")
            return body
        return self.statement()

    # expressions, loosest binding first

    def expr(self) -> Formula:
        left = self.iff_expr()
        while self.accept("==>"):
            left = implies(left, self.iff_expr())
        return left

    def iff_expr(self) -> Formula:
        left = self.or_expr()
        while self.accept("=="):
            left = iff(left, self.or_expr())
        return left

    def or_expr(self) -> Formula:
        left = self.and_expr()
        while self.accept("||"):
            left = lor(left, self.and_expr())
        return left

    def and_expr(self) -> Formula:
        left = self.unary()
        while self.accept("&&"):
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        if self.accept("!"):
            return Not(self.unary())
        t = self.tok
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        if t.kind == "ident":
            self.advance()
            self.check_declared(t)
            return Var(t.text)
        found = t.text or "end of input"
        raise ParseError(f"expected an expression, found {found!r}", t.line, t.col)

    def check_declared(self, t: Token):
        if t.text not in self.declared:
            raise UndeclaredVariableError(f"undeclared variable {t.text!r}", t.line, t.col)


def _parse_program_parts(text: str, allow_assert: bool):
    p = Parser(text)
    decls = p.declarations()
    if not decls["high"] and not decls["low"]:
        raise ParseError("expected a 'high' or 'low' declaration", p.tok.line, p.tok.col)
    if not decls["low"]:
        raise ParseError("at least one low variable must be declared", p.tok.line, p.tok.col)
    body = p.statements()
    assertion = None
    if allow_assert and p.accept("assert"):
        assertion = p.expr()
        p.accept(";")
    if p.tok.kind != "eof":
        raise ParseError(f"unexpected {p.tok.text!r}", p.tok.line, p.tok.col)
    return Program(tuple(decls["high"]), tuple(decls["low"]), body), assertion


def parse_program(text: str) -> Program:
    """Parse a ``.bp`` program."""
    return _parse_program_parts(text, allow_assert=False)[0]


def parse_program_with_assertion(text: str) -> tuple[Program, Formula | None]:
    """Parse a ``.bp`` program that may end with ``assert <expr>;``."""
    return _parse_program_parts(text, allow_assert=True)


def parse_formula(text: str, variables: Sequence[str]) -> Formula:
    p = Parser(text)
    p.declared = dict.fromkeys(variables, "var")
    f = p.expr()
    if p.tok.kind != "eof":
        raise ParseError(f"unexpected {p.tok.text!r}", p.tok.line, p.tok.col)
    return f


# ---------------------------------------------------------------------------
# Printing

_PREC = {"==>": 1, "==": 2, "||": 3, "&&": 4}


def _sugar(f: Formula):
    """Recognise the derived connective ``f`` was built from, if any."""
    if isinstance(f, Not):
        g = f.operand
        if isinstance(g, Const):
            return ("false",)
        if isinstance(g, And):
            if isinstance(g.left, Not) and isinstance(g.right, Not):
                return ("||", g.left.operand, g.right.operand)
            if isinstance(g.right, Not):
                return ("==>", g.left, g.right.operand)
    if isinstance(f, And):
        a, b = _as_implication(f.left), _as_implication(f.right)
        if a is not None and b is not None and a[0] == b[1] and a[1] == b[0]:
            return ("==", a[0], a[1])
    return None


def _as_implication(f: Formula):
    if isinstance(f, Not) and isinstance(f.operand, And) and isinstance(f.operand.right, Not):
        return f.operand.left, f.operand.right.operand
    return None


def format_formula(f: Formula, level: int = 0) -> str:
    """Render ``f`` in surface syntax; reparsing yields the same tree."""
    s = _sugar(f)
    if s is not None and s[0] == "false":
        return "false"
    if s is not None:
        op, a, b = s
        prec = _PREC[op]
        text = f"{format_formula(a, prec)} {op} {format_formula(b, prec + 1)}"
        return f"({text})" if prec < level else text
    if isinstance(f, Const):
        return "true"
    if isinstance(f, Var):
        return f.name
    if isinstance(f, And):
        prec = _PREC["&&"]
        text = f"{format_formula(f.left, prec)} && {format_formula(f.right, prec + 1)}"
        return f"({text})" if prec < level else text
    return "!" + format_formula(f.operand, 5)


def format_stmt(stmt: Stmt, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for s in flatten(stmt):
        if isinstance(s, Assign):
            lines.append(f"{pad}{s.target} := {format_formula(s.value)}")
        else:
            lines.append(
                f"{pad}if {format_formula(s.guard)} then {{\n"
                f"{format_stmt(s.then_branch, indent + 1)}\n"
                f"{pad}}} else {{\n"
                f"{format_stmt(s.else_branch, indent + 1)}\n"
                f"{pad}}}"
            )
    return ";\n".join(lines)


def format_program(program: Program, assertion: Formula | None = None) -> str:
    parts = []
    if program.high:
        parts.append(f"high {', '.join(program.high)};")
    parts.append(f"low {', '.join(program.low)};")
    parts.append(format_stmt(program.body))
    text = "\n".join(parts)
    if assertion is not None:
        text += f";\nassert {format_formula(assertion)};"
    return text + "\n"
