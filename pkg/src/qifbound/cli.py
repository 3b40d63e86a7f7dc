"""Command-line front end: ``qifbound <command> ...``.

Exit status is 0 whenever a verdict or value was computed (an out-of-bound
verdict is still a result), 1 for usage and input errors, and 2 when the
enumeration cap is exceeded or a decision is indeterminate.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .boolprog import DEFAULT_CAP, IOTable, format_program, io_table, parse_program
from .bounding import (
    PROBLEMS,
    decide,
    interference_witness,
    noninterferent,
    noninterferent_at,
    parse_q,
)
from .dist import Belief, Dist, Experiment, uniform
from .errors import CapExceededError, NotApplicableError, QifError
from .gadgets import (
    ROUTES,
    decide_majsat_via,
    dilution_family,
    gadget,
    parse_prop_formula,
)
from .measures import MEASURES, _fstr, be, ge_uniform_closed, me_uniform_closed, measure
from .selfcomp import cc_counterexample, check_assertion, self_compose_cc

EXIT_OK, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_program(path: str):
    return parse_program(_read(path))


def _load_dist(path: str) -> Dist:
    try:
        return Dist.from_json(json.loads(_read(path)))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None


def _table(args, program) -> IOTable:
    return io_table(program, cap=args.cap)


def _emit(args, obj: dict, text: str) -> None:
    if args.json:
        print(json.dumps(obj, ensure_ascii=False))
    else:
        print(text)


# ---------------------------------------------------------------------------
# Commands


def cmd_analyze(args) -> int:
    program = _load_program(args.program)
    t = _table(args, program)
    mu = _load_dist(args.dist) if args.dist else None
    names = [m.strip().upper() for m in args.measures.split(",") if m.strip()]
    for name in names:
        if name not in MEASURES and name != "BE":
            raise UsageError(f"unknown measure {name!r}; choose from {', '.join(MEASURES + ('BE',))}")
    values = []
    for name in names:
        if name == "BE":
            if args.h is None:
                raise UsageError("measure BE needs --h (and --l when the program has low inputs)")
            belief = Belief.of(_load_dist(args.belief)) if args.belief else Belief.of(uniform(t.high_space))
            l = args.l if args.l is not None else ("" if t.n_low == 1 else None)
            if l is None:
                raise UsageError("measure BE needs --l for a program with low inputs")
            values.append(be(t, Experiment(belief, args.h, l)))
        else:
            values.append(measure(name, t, mu if name in ("SE", "ME", "GE") else None))
    obj = {
        "program": args.program,
        "highVars": list(program.high),
        "lowVars": list(program.low),
        "lowInputs": list(program.low_inputs),
        "measures": [v.to_json() for v in values],
    }
    lines = [f"{args.program}: {len(program.high)} high, low inputs {list(program.low_inputs)}"]
    lines += [f"  {v}" + (f"  [l*={v.witness_low!r}]" if v.witness_low is not None else "") for v in values]
    _emit(args, obj, "\n".join(lines))
    return EXIT_OK


def cmd_bound(args) -> int:
    program = _load_program(args.program)
    t = _table(args, program)
    belief = _load_dist(args.belief) if args.belief else None
    d = decide(args.problem, t, args.q, belief=belief, h=args.h, l=args.l, exact_fallback=not args.no_exact)
    _emit(args, d.to_json(), str(d))
    return EXIT_LIMIT if d.in_bound is None else EXIT_OK


def cmd_selfcompose(args) -> int:
    program = _load_program(args.program)
    q = parse_q(args.q)
    c = self_compose_cc(program, q, cap=args.cap)
    text = c.to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    result = check_assertion(c, cap=args.cap)
    obj = {
        "copies": c.copies,
        "q": _fstr(q),
        "width": c.width,
        "holds": result.holds,
        "counterexampleInput": None if result.holds else result.counterexample.bits,
        "counterexample": None,
    }
    if not result.holds:
        obj["counterexample"] = cc_counterexample(program, q).to_json()
    if not args.out:
        obj["composed"] = text
    lines = [] if args.out else [text]
    lines.append(f"copies={c.copies} width={c.width} assertion {'holds' if result.holds else 'fails'}")
    if obj["counterexample"]:
        ce = obj["counterexample"]
        lines.append(f"counterexample at l={ce['low']!r}: " + ", ".join(f"{t['h']}->{t['o']}" for t in ce["traces"]))
    _emit(args, obj, "\n".join(lines))
    return EXIT_OK


def cmd_noninterference(args) -> int:
    program = _load_program(args.program)
    t = _table(args, program)
    if args.l is not None:
        verdict = noninterferent_at(t, args.l)
        obj = {"noninterferent": verdict, "low": args.l}
    else:
        verdict = noninterferent(t)
        w = interference_witness(t)
        obj = {"noninterferent": verdict, "witness": None if w is None else {"l": w[0], "h1": w[1], "h2": w[2]}}
    text = "non-interferent" if verdict else "interferent"
    if obj.get("witness"):
        w = obj["witness"]
        text += f" (l={w['l']!r}: h={w['h1']} and h={w['h2']} give different outputs)"
    _emit(args, obj, text)
    return EXIT_OK


def cmd_gadget(args) -> int:
    phi = parse_prop_formula(_read(args.formula))
    route = args.route.upper()
    text = format_program(gadget(route, phi))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    _emit(args, {"route": route, "gadget": text}, text.rstrip())
    return EXIT_OK


def cmd_majsat(args) -> int:
    phi = parse_prop_formula(_read(args.formula))
    run = decide_majsat_via(args.route, phi)
    text = (
        f"{run.route}: threshold {run.threshold.symbolic}, "
        f"{'in' if run.verdict else 'not in'} MAJSAT (oracle: #SAT={run.count}, "
        f"{'in' if run.oracle_verdict else 'not in'})"
    )
    _emit(args, run.to_json(), text)
    return EXIT_OK


def _load_traces(path: str) -> list[tuple[str, str, str]]:
    raw = _read(path)
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError:
        out = []
        for line in raw.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) == 2:
                parts = [parts[0], "", parts[1]]
            if len(parts) != 3:
                raise UsageError(f"{path}: expected 'h l o' per line, got {line!r}")
            out.append(tuple("" if p == "-" else p for p in parts))
        return out
    items = obj["traces"] if isinstance(obj, dict) else obj
    return [(tr["h"], tr.get("l", ""), tr["o"]) for tr in items]


def cmd_dilute(args) -> int:
    traces = _load_traces(args.traces)
    program = dilution_family(traces, args.t)
    t = _table(args, program)
    me_v, ge_v = me_uniform_closed(t), ge_uniform_closed(t)
    text = format_program(program)
    obj = {"t": args.t, "traces": len(traces), "program": text, "ME": me_v.to_json(), "GE": ge_v.to_json()}
    _emit(args, obj, f"{text.rstrip()}\n# {me_v}\n# {ge_v}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON object per query")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="enumeration budget in input bits")

    parser = _Parser(prog="qifbound", description="Quantitative information flow of loop-free boolean programs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[common], help="compute leakage measures")
    p.add_argument("program")
    p.add_argument("--measures", default="SE,ME,GE,CC", help="comma list of SE,ME,GE,CC,MECC,GECC,BE")
    p.add_argument("--dist", help="joint input distribution (JSON) for SE/ME/GE; uniform by default")
    p.add_argument("--belief", help="belief over high inputs (JSON) for BE")
    p.add_argument("--h", help="actual high input for BE, as a bitstring")
    p.add_argument("--l", help="low input for BE, as a bitstring")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bound", parents=[common], help="decide a bounding problem")
    p.add_argument("program")
    p.add_argument("--problem", required=True, type=str.upper, choices=PROBLEMS)
    p.add_argument("--q", required=True, help="bound as a decimal or a/b")
    p.add_argument("--belief", help="belief over high inputs (JSON) for BE1/BE2")
    p.add_argument("--h", help="high input for BE1")
    p.add_argument("--l", help="low input for BE1/BE1CC")
    p.add_argument("--no-exact", action="store_true", help="SE: stop at 256-bit precision")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("selfcompose", parents=[common], help="self-compose for the CC bound and check it")
    p.add_argument("program")
    p.add_argument("--q", required=True)
    p.add_argument("--out", help="write the composed program here")
    p.set_defaults(func=cmd_selfcompose)

    p = sub.add_parser("noninterference", parents=[common], help="check non-interference")
    p.add_argument("program")
    p.add_argument("--l", help="check only this low input")
    p.set_defaults(func=cmd_noninterference)

    p = sub.add_parser("gadget", parents=[common], help="print a reduction gadget for a formula")
    p.add_argument("formula")
    p.add_argument("--route", required=True, type=str.upper, choices=ROUTES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("majsat", parents=[common], help="decide majority satisfiability via a reduction")
    p.add_argument("formula")
    p.add_argument("--route", required=True, type=str.upper, choices=ROUTES)
    p.set_defaults(func=cmd_majsat)

    p = sub.add_parser("dilute", parents=[common], help="build a dilution family member from traces")
    p.add_argument("traces")
    p.add_argument("--t", type=int, required=True, help="number of extra low input bits")
    p.set_defaults(func=cmd_dilute)
    return parser


def _fail(json_mode: bool, kind: str, message: str, code: int) -> int:
    print(f"qifbound: {message}", file=sys.stderr)
    if json_mode:
        print(json.dumps({"error": {"type": kind, "message": message}}))
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_mode = "--json" in argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command; see qifbound --help")
        if args.cap is not None and args.cap < 0:
            raise UsageError("--cap must be non-negative")
        return args.func(args)
    except UsageError as exc:
        return _fail(json_mode, "usage", str(exc), EXIT_USAGE)
    except CapExceededError as exc:
        return _fail(json_mode, "cap-exceeded", str(exc), EXIT_LIMIT)
    except NotApplicableError as exc:
        return _fail(json_mode, "not-applicable", str(exc), EXIT_USAGE)
    except QifError as exc:
        return _fail(json_mode, type(exc).__name__, str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
