import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qifbound.boolprog import bitstrings, io_table, parse_program
from qifbound.dist import (
    Belief,
    Dist,
    Experiment,
    output_mass,
    point_mass,
    posterior,
    product,
    product_with_point,
    relative_entropy,
    to_fraction,
    uniform,
)
from qifbound.errors import DistributionError, SupportError

from .conftest import M1_TEXT

F = Fraction


def weight_lists(n):
    return st.lists(st.integers(1, 20), min_size=n, max_size=n).map(
        lambda xs: [F(x, sum(xs)) for x in xs]
    )


def test_to_fraction_forms():
    assert to_fraction("3/4") == F(3, 4)
    assert to_fraction("0.25") == F(1, 4)
    assert to_fraction(1) == F(1)


def test_validation():
    with pytest.raises(DistributionError):
        Dist(("a", "b"), (F(1, 2), F(1, 3)))
    with pytest.raises(DistributionError):
        Dist(("a", "a"), (F(1, 2), F(1, 2)))
    with pytest.raises(DistributionError):
        Dist(("a", "b"), (F(3, 2), F(-1, 2)))
    with pytest.raises(SupportError):
        Belief(("a", "b"), (F(1), F(0)))


def test_json_round_trip():
    d = Dist(("00", "01", "10"), (F(1, 2), F(1, 3), F(1, 6)))
    assert Dist.from_json(d.to_json()) == d


def test_marginal_and_condition():
    d = uniform(bitstrings(2))
    m = d.marginal(lambda p: p[0])
    assert m["0"] == F(1, 2)
    c = d.condition(lambda p: p != "11")
    assert c["11"] == 0 and c["00"] == F(1, 3)
    with pytest.raises(DistributionError):
        d.condition(lambda p: False)


def test_products():
    u = uniform(["0", "1"])
    j = product_with_point(u, "1", ["0", "1"])
    assert j["01"] == F(1, 2) and j["00"] == 0
    assert product(u, u)["10"] == F(1, 4)


@given(weight_lists(4))
def test_posterior_total_probability(ws):
    """sum over o of P(o) * posterior(o) recovers the prior."""
    t = io_table(parse_program(M1_TEXT))
    prior = Belief(tuple(t.high_space), tuple(ws))
    acc = dict.fromkeys(prior.space, F(0))
    for o in {t.label(c) for c in t.codes[:, 0].tolist()}:
        p_o = output_mass(prior, t, "", o)
        for h, w in posterior(prior, t, "", o).items():
            acc[h] += p_o * w
    assert acc == dict(prior.items())


@given(weight_lists(4), weight_lists(4))
def test_relative_entropy_non_negative(a, b):
    space = tuple(bitstrings(2))
    da, db = Dist(space, tuple(a)), Dist(space, tuple(b))
    assert relative_entropy(da, db) >= -1e-12
    assert relative_entropy(da, da) == pytest.approx(0, abs=1e-12)


def test_relative_entropy_to_point_is_surprisal():
    u = uniform(bitstrings(3))
    assert relative_entropy(u, point_mass("010", u.space)) == pytest.approx(3.0)
    with pytest.raises(SupportError):
        relative_entropy(point_mass("000", u.space), point_mass("010", u.space))


def test_experiment_checks_high_input():
    with pytest.raises(DistributionError):
        Experiment(uniform(["0", "1"]), "2")
    e = Experiment(uniform(["0", "1"]), "1")
    assert isinstance(e.belief, Belief)
    assert math.isclose(float(e.belief["1"]), 0.5)
