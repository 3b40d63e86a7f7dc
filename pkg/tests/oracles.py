"""Independent reference implementations used to check the package.

Nothing here calls into qifbound's evaluators or measures; programs are
interpreted directly from their AST and leakage is computed from
dictionaries of counts with plain floats and fractions.
"""

import math
from collections import Counter
from fractions import Fraction
from itertools import product

from qifbound.boolprog import And, Assign, Const, If, Not, Seq, Var


def ev(f, state):
    if isinstance(f, Const):
        return True
    if isinstance(f, Var):
        return state[f.name]
    if isinstance(f, And):
        return ev(f.left, state) and ev(f.right, state)
    if isinstance(f, Not):
        return not ev(f.operand, state)
    raise TypeError(f)


def execute(stmt, state):
    if isinstance(stmt, Assign):
        state[stmt.target] = ev(stmt.value, state)
    elif isinstance(stmt, Seq):
        execute(stmt.first, state)
        execute(stmt.second, state)
    elif isinstance(stmt, If):
        execute(stmt.then_branch if ev(stmt.guard, state) else stmt.else_branch, state)
    else:
        raise TypeError(stmt)


def bits(values):
    return "".join("1" if v else "0" for v in values)


def brute_table(program, low_inputs=None):
    """{(h, l): o} by direct interpretation; l ranges over ``low_inputs``."""
    lows_in = program.low_inputs if low_inputs is None else low_inputs
    out = {}
    for hv in product((False, True), repeat=len(program.high)):
        for lv in product((False, True), repeat=len(lows_in)):
            state = dict.fromkeys(program.low, False)
            state.update(zip(program.high, hv))
            state.update(zip(lows_in, lv))
            execute(program.body, state)
            out[(bits(hv), bits(lv))] = bits(state[v] for v in program.low)
    return out


def column_classes(table):
    cols = {}
    for (h, l), o in table.items():
        cols.setdefault(l, Counter())[o] += 1
    return cols


def se_uniform(table):
    """I(O;H|L) = H(O|L) - H(O|H,L) under the uniform prior, from counts."""
    cols = column_classes(table)
    n = len(table)
    h_o_l = 0.0
    for counts in cols.values():
        nh = sum(counts.values())
        for c in counts.values():
            h_o_l += (c / n) * math.log2(nh / c)
    return h_o_l  # H(O|H,L) = 0 for a deterministic table


def me_uniform(table):
    cols = column_classes(table)
    nh = len(table) // len(cols)
    # V(H|L) = |L| * (1/(nH |L|)) ; V(H|O,L) = sum over (o,l) of 1/(nH |L|)
    v_l = Fraction(len(cols), nh * len(cols))
    v_ol = Fraction(sum(len(c) for c in cols.values()), nh * len(cols))
    return math.log2(v_ol / v_l)


def guessing(weights):
    ws = sorted(weights, reverse=True)
    return sum(Fraction(i) * w for i, w in enumerate(ws, 1))


def ge_uniform(table):
    cols = column_classes(table)
    n = len(table)
    w = Fraction(1, n)
    g_l = sum(guessing([w] * sum(c.values())) for c in cols.values())
    g_ol = sum(guessing([w] * k) for c in cols.values() for k in c.values())
    return g_l - g_ol


def cc_count(table):
    return max(len(c) for c in column_classes(table).values())


def be_uniform(table, h, l=""):
    o = table[(h, l)]
    same = sum(1 for (h2, l2), o2 in table.items() if l2 == l and o2 == o)
    nh = sum(1 for (_, l2) in table if l2 == l)
    return -math.log2(same / nh)
