import random

import pytest
from hypothesis import strategies as st

from qifbound.boolprog import parse_program
from qifbound.corpus import random_program

M1_TEXT = """
high h1, h2;
low o;
# O is 0 exactly when H is the password 01
o := !(!h1 && h2)
"""

M2_TEXT = """
high h1, h2;
low o1, o2;
o1 := h1;
o2 := h2
"""

EX4_TEXT = """
high x, y;
low z, w;
z := x;
w := y;
if x && y then z := !z else w := !w
"""


@pytest.fixture
def m1():
    return parse_program(M1_TEXT)


@pytest.fixture
def m2():
    return parse_program(M2_TEXT)


@pytest.fixture
def ex4():
    return parse_program(EX4_TEXT)


def programs(max_bits=8, **kw):
    """Hypothesis strategy of random programs, drawn through a seeded RNG."""
    return st.integers(0, 2**32 - 1).map(lambda s: random_program(random.Random(s), max_bits=max_bits, **kw))
