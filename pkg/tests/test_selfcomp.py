from collections import Counter
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qifbound.boolprog import io_table, parse_program, stmt_vars
from qifbound.bounding import decide_cc_bound, decide_ge_bound
from qifbound.errors import CapExceededError, NotApplicableError
from qifbound.selfcomp import (
    cc_counterexample,
    check_assertion,
    ge_counterexample,
    ge_size_bound,
    noninterference_composition,
    parse_composed,
    self_compose_cc,
    self_compose_k,
    serialize,
)

from .conftest import programs
from .oracles import brute_table

F = Fraction


def test_copy_count_and_renaming(m2):
    c = self_compose_cc(m2, F(3, 2))
    assert c.copies == 3
    names = set(c.program.high) | set(c.program.low)
    assert names.isdisjoint(m2.high + m2.low)
    assert len(c.copy_highs) == 3 and all(len(h) == 2 for h in c.copy_highs)


def test_copies_run_independently(m2):
    c = self_compose_k(m2, 2)
    t = brute_table(c.program)
    for (h, _), o in t.items():
        # each copy of the identity echoes its own high bits
        assert o == h


def test_m1_and_m2_assertions(m1, m2):
    assert check_assertion(self_compose_cc(m1, 1)).holds
    r = check_assertion(self_compose_cc(m2, 1))
    assert not r.holds and r.counterexample is not None
    assert check_assertion(self_compose_cc(m2, 2)).holds


def test_shared_low_inputs():
    p = parse_program("high h; low l, o; o := l && h")
    c = self_compose_k(p, 3)
    assert c.program.low_inputs == ("l",)
    assert check_assertion(self_compose_cc(p, F(1, 2))).holds is False
    assert check_assertion(self_compose_cc(p, 1)).holds


def test_noninterference_composition(m1):
    assert not check_assertion(noninterference_composition(m1)).holds
    const = parse_program("high h; low o; o := h && !h")
    assert check_assertion(noninterference_composition(const)).holds


def test_serialization_round_trip(m2):
    c = self_compose_cc(m2, 1)
    p, a = parse_composed(serialize(c))
    assert p.high == c.program.high and p.low == c.program.low
    assert a is not None
    assert brute_table(p) == brute_table(c.program)


def test_cap_is_enforced(m2):
    with pytest.raises(CapExceededError):
        self_compose_cc(m2, 3, cap=12)


@settings(max_examples=80, deadline=None)
@given(programs(max_bits=4, max_low=2), st.sampled_from([F(1, 2), F(1), F(3, 2), F(2)]))
def test_assertion_iff_cc_bound(p, q):
    c = self_compose_cc(p, q)
    assert check_assertion(c).holds == decide_cc_bound(p, q).in_bound


@settings(max_examples=60, deadline=None)
@given(programs(max_bits=5, max_low=2))
def test_renaming_hygiene(p):
    c = self_compose_k(p, 2)
    base = set(p.high) | set(p.low)
    used = stmt_vars(c.program.body)
    # originals survive only as shared low inputs read at the start
    assert used & base <= set(p.low_inputs)
    for hs in c.copy_highs:
        assert not set(hs) & base


@settings(max_examples=80, deadline=None)
@given(programs(max_bits=6), st.sampled_from([F(1, 2), F(1), F(3, 2), F(2)]))
def test_cc_counterexample_re_measures_above_q(p, q):
    if decide_cc_bound(p, q).in_bound:
        with pytest.raises(NotApplicableError):
            cc_counterexample(p, q)
        return
    ce = cc_counterexample(p, q)
    assert not decide_cc_bound(ce.as_table(), q).in_bound
    t = io_table(p)
    for h, o in ce.traces:
        assert t.output(h, ce.low) == o


def test_cc_counterexample_m2():
    m2 = parse_program("high h1, h2; low o1, o2; o1 := h1; o2 := h2")
    ce = cc_counterexample(m2, 1)
    assert ce.traces == (("00", "00"), ("01", "01"), ("10", "10"))
    assert ce.value.log_of == 3


def test_ge_size_bound_values():
    assert ge_size_bound(F(1, 2)) == 3
    assert ge_size_bound(F(2, 5)) == 2
    assert ge_size_bound(1) == 5


@settings(max_examples=80, deadline=None)
@given(programs(max_bits=4, allow_low_inputs=False), st.sampled_from([F(1, 4), F(1, 2), F(3, 4), F(1)]))
def test_ge_counterexample_is_minimal_and_bounded(p, q):
    if decide_ge_bound(p, q).in_bound:
        return
    ce = ge_counterexample(p, q)
    assert ce.value.exact > q
    assert len(ce) <= ge_size_bound(q)
    t = io_table(p)
    rows = [(h, t.output(h)) for h in t.high_space]
    assert set(ce.traces) <= set(rows)
    # brute force: no subset with one trace fewer exceeds q
    for sub in combinations(rows, len(ce) - 1):
        counts = Counter(o for _, o in sub)
        k = len(sub)
        if k:
            assert F(k, 2) - F(sum(c * c for c in counts.values()), 2 * k) <= q


def test_ge_counterexample_m2():
    m2 = parse_program("high h1, h2; low o1, o2; o1 := h1; o2 := h2")
    ce = ge_counterexample(m2, F(1, 2))
    assert len(ce) == 3 and ce.value.exact == 1
    with pytest.raises(NotApplicableError):
        ge_counterexample(m2, F(3, 2))
