"""Quantitative information flow for loop-free boolean programs.

Parse programs, compute Shannon, min-, guessing-entropy, belief and
channel-capacity leakage exactly, decide leakage bounds, self-compose for
the channel-capacity bound, and run majority-satisfiability reductions.
"""

__version__ = "0.1.0"

from .boolprog import (
    IOTable,
    Program,
    Valuation,
    eval_formula,
    format_program,
    io_table,
    output_set,
    parse_formula,
    parse_program,
    restrict,
    run,
    weakest_precondition,
)
from .bounding import BoundDecision, decide, noninterferent, noninterferent_at
from .dist import Belief, Dist, Experiment, point_mass, uniform
from .measures import QifValue, be, cc, ge, gecc, me, mecc, se

__all__ = [
    "Belief",
    "BoundDecision",
    "Dist",
    "Experiment",
    "IOTable",
    "Program",
    "QifValue",
    "Valuation",
    "be",
    "cc",
    "decide",
    "eval_formula",
    "format_program",
    "ge",
    "gecc",
    "io_table",
    "me",
    "mecc",
    "noninterferent",
    "noninterferent_at",
    "output_set",
    "parse_formula",
    "parse_program",
    "point_mass",
    "restrict",
    "run",
    "se",
    "uniform",
    "weakest_precondition",
]
