"""Acceptance criteria, one test each; each prints a PASS/FAIL line with its runtime."""

import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import mpmath
import pytest

from qifbound import bounding
from qifbound.boolprog import IOTable, bitstrings, io_table, parse_program
from qifbound.bounding import (
    EXACT_INTEGER,
    EXACT_RATIONAL,
    PROBLEMS,
    decide,
    decide_cc_bound,
    decide_cclike_belief,
    decide_se_bound,
)
from qifbound.corpus import (
    corpus_program,
    random_program,
    random_prop_formula,
    table_corpus,
)
from qifbound.dist import Belief, Dist, Experiment, uniform
from qifbound.gadgets import (
    ROUTES,
    decide_majsat_via,
    default_names,
    dilution_family,
    formula_from_truth_table,
    formula_with_count,
    majsat_oracle,
)
from qifbound.measures import (
    be,
    be_definitional,
    be_uniform_all,
    cc,
    ge,
    ge_columns,
    ge_uniform_closed,
    gecc,
    me,
    me_uniform_closed,
    preimage_mass,
    se,
)
from qifbound.selfcomp import cc_counterexample, check_assertion, self_compose_cc

from . import oracles
from .conftest import EX4_TEXT, M1_TEXT, M2_TEXT

F = Fraction


@contextmanager
def criterion(capsys, number, title, limit):
    start = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        with capsys.disabled():
            print(f"\ncriterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({elapsed:.2f}s, limit {limit}s)")


def corpus_tables():
    for nh, nl, codes in table_corpus(max_high=3, max_low_inputs=1):
        yield io_table(corpus_program(nh, nl, codes))


def random_programs(seed, count, max_bits, **kw):
    rng = random.Random(seed)
    return [random_program(rng, max_bits=max_bits, **kw) for _ in range(count)]


def test_criterion_01_worked_examples(capsys):
    with criterion(capsys, 1, "worked examples M1 and M2", 1.0):
        m1, m2 = parse_program(M1_TEXT), parse_program(M2_TEXT)
        assert se(m1).value == pytest.approx(0.811278, abs=1e-6)
        assert se(m2).value == pytest.approx(2.0, abs=1e-6)
        assert me(m1).log_of == 2 and me(m1).value == 1
        assert me(m2).log_of == 4 and me(m2).value == 2
        assert ge(m1).exact == F(3, 4) and ge(m2).exact == F(3, 2)
        assert cc(m1).value == 1 and cc(m2).value == 2
        u = Belief.of(uniform(bitstrings(2)))
        for h in bitstrings(2):
            want = 2.0 if h == "01" else 0.415037
            assert be(m1, Experiment(u, h)).value == pytest.approx(want, abs=1e-6)
            assert be(m2, Experiment(u, h)).value == pytest.approx(2.0, abs=1e-6)


def test_criterion_02_three_output_example(capsys):
    with criterion(capsys, 2, "example with SE 1.5, ME log 3, GE 5/4, CC log 3", 1.0):
        p = parse_program(EX4_TEXT)
        assert se(p).value == pytest.approx(1.5, abs=1e-12)
        assert me(p).value == pytest.approx(math.log2(3), abs=1e-9)
        assert ge(p).exact == F(5, 4)
        assert cc(p).log_of == 3


def _zero_profile(t: IOTable):
    """Which measures vanish, each from its definitional route."""
    s = se(t)
    return {
        "SE": abs(s.value) < 1e-12 and abs(s.cross_check) < 1e-12,
        "ME": abs(me(t).cross_check) < 1e-12 and me(t).log_of == 1,
        "GE": ge(t).exact == 0,
        "CC": cc(t).log_of == 1,
        "BE": all(v.log_of == 1 for _, _, v in be_uniform_all(t)),
    }


def test_criterion_03_zero_iff_noninterference(capsys):
    with criterion(capsys, 3, "measure = 0 iff non-interference (table corpus + 500 random ASTs)", 120.0):
        violations = []
        seen = 0
        for t in corpus_tables():
            ni = all(len(set(t.codes[:, j].tolist())) == 1 for j in range(t.n_low))
            for name, zero in _zero_profile(t).items():
                if zero != ni:
                    violations.append((name, t.codes.tolist()))
            seen += 1
        assert seen == 66090
        for p in random_programs(3, 500, 10):
            t = io_table(p)
            ni = all(len(c) == 1 for c in oracles.column_classes(oracles.brute_table(p)).values())
            for name, zero in _zero_profile(t).items():
                if zero != ni:
                    violations.append((name, str(p)))
        assert violations == []


def test_criterion_04_closed_forms(capsys):
    with criterion(capsys, 4, "closed forms agree with definitions on 200 programs", 60.0):
        rng = random.Random(4)
        for p in random_programs(4, 200, 10):
            t = io_table(p)
            assert me(t).log_of == me_uniform_closed(t).log_of
            assert me(t).cross_check == pytest.approx(me_uniform_closed(t).value, abs=1e-12)
            assert ge(t).exact == ge_uniform_closed(t).exact
            s = se(t)
            assert s.value == pytest.approx(s.cross_check, abs=1e-9)
            u = Belief.of(uniform(t.high_space))
            for _ in range(8):
                e = Experiment(u, rng.choice(t.high_space), rng.choice(t.low_space))
                surprisal = -math.log2(preimage_mass(t, e))
                assert surprisal == pytest.approx(be_definitional(t, e), abs=1e-9)


def test_criterion_05_capacity_reductions(capsys):
    with criterion(capsys, 5, "CC = ME[U] without low inputs; gecc bounds 10^3 random mu", 120.0):
        for p in random_programs(5, 200, 10, allow_low_inputs=False):
            t = io_table(p)
            assert t.n_low == 1
            assert cc(t).log_of == me_uniform_closed(t).log_of
            assert max(len(c) for c in t.column_counts) * 1 == me_uniform_closed(t).log_of
        rng = random.Random(55)
        progs = [p for p in random_programs(56, 400, 7) if p.low_inputs][:50]
        assert len(progs) == 50
        for p in progs:
            t = io_table(p)
            g = gecc(t).exact
            assert g == max(ge_columns(t))
            for _ in range(1000):
                raw = [rng.choice((0, 0, 1, 2, 5, 10, 30)) for _ in range(len(t))]
                if not any(raw):
                    raw[0] = 1
                mu = Dist(tuple(t.joint_space()), tuple(F(x, sum(raw)) for x in raw))
                assert ge(t, mu).exact <= g


def test_criterion_06_self_composition(capsys):
    with criterion(capsys, 6, "self-composition assertion iff CC bound, counterexamples re-measure", 120.0):
        qs = (F(1, 2), F(1), F(3, 2), F(2))
        for p in random_programs(6, 100, 5, max_high=3, max_low=2):
            for q in qs:
                verdict = decide_cc_bound(p, q).in_bound
                assert check_assertion(self_compose_cc(p, q)).holds == verdict
                if not verdict:
                    ce = cc_counterexample(p, q)
                    assert len(ce) == bounding.floor_pow2(q) + 1
                    assert not decide_cc_bound(ce.as_table(), q).in_bound


def test_criterion_07_majsat(capsys):
    with criterion(capsys, 7, "MAJSAT via six routes agrees with the brute-force oracle", 300.0):
        disagreements = []
        formulas = []
        for n in (2, 3):
            formulas += [formula_from_truth_table(default_names(n), bits) for bits in range(1 << (1 << n))]
        rng = random.Random(7)
        for n in range(4, 9):
            half = 1 << (n - 1)
            formulas += [formula_with_count(n, half), formula_with_count(n, half + 1)]
            formulas += [random_prop_formula(rng, n) for _ in range(100)]
        assert len(formulas) == 16 + 256 + 10 + 500
        for phi in formulas:
            oracle = majsat_oracle(phi)
            for route in ROUTES:
                if decide_majsat_via(route, phi, check=False).verdict != oracle:
                    disagreements.append((route, phi.to_text()))
        assert disagreements == []


def test_criterion_08_belief_capacity(capsys):
    with criterion(capsys, 8, "belief capacity problems iff non-interference, any q", 60.0):
        tables = list(corpus_tables())
        tables += [io_table(p) for p in random_programs(8, 300, 8)]
        for t in tables:
            cols = [set(t.codes[:, j].tolist()) for j in range(t.n_low)]
            for q in (F(1, 10), F(1), F(10)):
                assert decide_cclike_belief(t, q).in_bound == all(len(c) == 1 for c in cols)
                for j, l in enumerate(t.low_space):
                    assert decide_cclike_belief(t, q, l=l).in_bound == (len(cols[j]) == 1)


def test_criterion_09_dilution(capsys):
    with criterion(capsys, 9, "dilution drives ME and GE below 0.05 by t = 6", 10.0):
        traces = [("0", "", "0"), ("1", "", "1")]
        me_vals, ge_vals = [], []
        for t in range(7):
            tab = io_table(dilution_family(traces, t))
            for h, _, o in traces:
                assert tab.output(h, "0" * t)[-1] == o
            me_vals.append(me_uniform_closed(tab).value)
            ge_vals.append(ge_uniform_closed(tab).exact)
        assert me_vals == sorted(me_vals, reverse=True) and ge_vals == sorted(ge_vals, reverse=True)
        assert me_vals[0] == 1 and ge_vals[0] == F(1, 2)
        assert me_vals[6] < 0.05 and ge_vals[6] < F(1, 20)
        assert me_vals[6] == pytest.approx(math.log2(65 / 64), abs=1e-12)


def _truth(form, q, prec=2000):
    with mpmath.workprec(prec):
        return form.evaluate(prec) <= mpmath.mpf(q.numerator) / q.denominator


def test_criterion_10_exactness(capsys, monkeypatch):
    with criterion(capsys, 10, "exact methods never indeterminate; SE boundary cases escalate", 60.0):
        progs = random_programs(10, 150, 8)
        # exact methods always decide
        for p in progs[:60]:
            t = io_table(p)
            for problem in PROBLEMS:
                for q in (F(0), F(1, 3), F(1), F(3, 2)):
                    d = decide(problem, t, q, h=t.high_space[0], l=t.low_space[0])
                    if d.method in (EXACT_INTEGER, EXACT_RATIONAL) or problem != "SE_U":
                        assert d.in_bound is not None
        escalated = resolved = 0
        for p in progs:
            t = io_table(p)
            s = se(t)
            form = s.log_linear
            if not form.logs:
                d = decide_se_bound(t, form.rational)
                assert d.in_bound is True and d.method == EXACT_RATIONAL
                continue
            # q equal to the float measurement: within 1e-9, must escalate
            q = F(form.to_float())
            d = decide_se_bound(t, q)
            assert len(d.ladder) > 1
            escalated += 1
            if d.in_bound is not None:
                resolved += 1
                assert d.in_bound == bool(_truth(form, q))
            # q within 2**-300 of the value: beyond the float ladder
            with mpmath.workprec(340):
                q_close = F(mpmath.nstr(form.evaluate(340), 100, strip_zeros=False))
            d = decide_se_bound(t, q_close, exact_fallback=False)
            assert d.in_bound is None and "indeterminate" in d.note
            d = decide_se_bound(t, q_close)
            assert d.in_bound is None or d.in_bound == bool(_truth(form, q_close))
        assert escalated > 20 and resolved == escalated
        # with the float ladder removed and every margin treated as close,
        # the exact power comparison decides small-denominator bounds alone
        monkeypatch.setattr(bounding, "LADDER", ())
        exact = 0
        for p in progs[:40]:
            t = io_table(p)
            form = se(t).log_linear
            if form.logs:
                q = F(round(form.to_float() * 16), 16)
                d = decide_se_bound(t, q, epsilon=math.inf)
                assert d.method == EXACT_INTEGER and d.in_bound == bool(_truth(form, q))
                exact += 1
        assert exact > 5
