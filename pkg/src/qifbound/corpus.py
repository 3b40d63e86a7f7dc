"""Program generators used by the test suites and the benchmarks.

``random_program`` draws small random ASTs; ``table_corpus`` enumerates
every input/output table over a few bits and realises each one as a
program via :func:`~qifbound.boolprog.synthesize_program`.
"""

from __future__ import annotations

import random
from collections.abc import Iterator, Sequence

import numpy as np

from .boolprog import (
    FALSE,
    TRUE,
    And,
    Assign,
    Formula,
    If,
    Not,
    Program,
    Stmt,
    Var,
    iff,
    implies,
    lor,
    seq,
    synthesize_program,
)
from .gadgets import PropFormula, default_names


def random_formula(rng: random.Random, names: Sequence[str], depth: int = 3) -> Formula:
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.06:
            return TRUE
        if r < 0.12:
            return FALSE
        return Var(rng.choice(list(names)))
    kind = rng.random()
    if kind < 0.2:
        return Not(random_formula(rng, names, depth - 1))
    a = random_formula(rng, names, depth - 1)
    b = random_formula(rng, names, depth - 1)
    if kind < 0.55:
        return And(a, b)
    if kind < 0.8:
        return lor(a, b)
    if kind < 0.9:
        return implies(a, b)
    return iff(a, b)


def random_stmt(rng: random.Random, names: Sequence[str], targets: Sequence[str], size: int, depth: int = 2) -> Stmt:
    stmts = []
    for _ in range(max(1, size)):
        if depth > 0 and rng.random() < 0.3:
            stmts.append(
                If(
                    random_formula(rng, names, 2),
                    random_stmt(rng, names, targets, rng.randint(1, 2), depth - 1),
                    random_stmt(rng, names, targets, rng.randint(1, 2), depth - 1),
                )
            )
        else:
            stmts.append(Assign(rng.choice(list(targets)), random_formula(rng, names, 3)))
    return seq(*stmts)


def random_program(
    rng: random.Random,
    max_bits: int = 10,
    max_high: int | None = None,
    max_low: int = 3,
    allow_low_inputs: bool = True,
) -> Program:
    """A random program whose input width is at most ``max_bits``.

    Without ``allow_low_inputs`` every low variable is assigned before it
    can be read, so the program has no low inputs.
    """
    while True:
        n_low = rng.randint(1, max_low)
        hi_cap = max_bits if max_high is None else max_high
        n_high = rng.randint(0, max(0, min(hi_cap, max_bits - (n_low if allow_low_inputs else 0))))
        if n_high == 0 and rng.random() < 0.7:
            n_high = 1
        highs = [f"h{i}" for i in range(1, n_high + 1)]
        lows = [f"l{i}" for i in range(1, n_low + 1)]
        names = highs + lows
        body = random_stmt(rng, names, lows + highs[:1], rng.randint(1, 4))
        if not allow_low_inputs:
            init = [Assign(l, random_formula(rng, highs or [], 2) if highs else TRUE) for l in lows]
            body = seq(*init, body)
        p = Program(tuple(highs), tuple(lows), body)
        if p.width <= max_bits:
            return p


def random_prop_formula(rng: random.Random, n: int, depth: int | None = None) -> PropFormula:
    names = default_names(n)
    return PropFormula(names, random_formula(rng, names, depth if depth is not None else rng.randint(2, 5)))


def table_corpus(max_high: int = 3, max_low_inputs: int = 1) -> Iterator[tuple[int, int, np.ndarray]]:
    """Every table with one output bit over up to the given input widths.

    Yields ``(n_high, n_low_inputs, codes)`` with ``codes`` of shape
    ``(2**n_high, 2**n_low_inputs)``; the single low variable doubles as the
    low input when ``n_low_inputs`` is 1.
    """
    for nh in range(max_high + 1):
        for nl in range(max_low_inputs + 1):
            cells = (1 << nh) << nl
            idx = np.arange(1 << cells, dtype=np.int64)
            bits = ((idx[:, None] >> np.arange(cells - 1, -1, -1)) & 1).astype(np.int64)
            for row in bits:
                yield nh, nl, row.reshape(1 << nh, 1 << nl)


def corpus_program(nh: int, nl: int, codes: np.ndarray) -> Program:
    """Program realising one table from :func:`table_corpus`."""
    highs = tuple(f"h{i}" for i in range(1, nh + 1))
    lows = ("l",)
    return synthesize_program(highs, lows, codes, low_inputs=lows[:nl])
