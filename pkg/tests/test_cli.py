import json
import subprocess
import sys

import pytest

from qifbound.boolprog import parse_program
from qifbound.bounding import decide
from qifbound.cli import main
from qifbound.measures import measure

from .conftest import EX4_TEXT, M1_TEXT, M2_TEXT


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, text in {"m1": M1_TEXT, "m2": M2_TEXT, "ex4": EX4_TEXT}.items():
        f = tmp_path / f"{name}.bp"
        f.write_text(text)
        out[name] = str(f)
    phi = tmp_path / "phi.txt"
    phi.write_text("vars x1, x2, x3;\nx1 || x2 && x3\n")
    out["phi"] = str(phi)
    tr = tmp_path / "traces.txt"
    tr.write_text("0 - 0\n1 - 1\n")
    out["traces"] = str(tr)
    bad = tmp_path / "bad.bp"
    bad.write_text("high h; low o; o := k")
    out["bad"] = str(bad)
    return out


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_analyze_matches_library(capsys, files):
    code, obj = run_json(capsys, "analyze", files["ex4"], "--measures", "SE,ME,GE,CC,MECC,GECC")
    assert code == 0
    p = parse_program(EX4_TEXT)
    want = [measure(m, p).to_json() for m in ("SE", "ME", "GE", "CC", "MECC", "GECC")]
    assert obj["measures"] == want


def test_analyze_be_needs_h(capsys, files):
    assert main(["analyze", files["m1"], "--measures", "BE"]) == 1
    code, obj = run_json(capsys, "analyze", files["m1"], "--measures", "BE", "--h", "01")
    assert code == 0 and obj["measures"][0]["bits"] == 2.0


def test_bound_matches_library(capsys, files):
    for problem, q in (("CC", "1"), ("ME_U", "3/2"), ("GE_U", "5/4"), ("SE_U", "1.5"), ("BE2", "1")):
        code, obj = run_json(capsys, "bound", files["ex4"], "--problem", problem, "--q", q)
        assert code == 0
        assert obj == decide(problem, parse_program(EX4_TEXT), q).to_json()


def test_selfcompose(capsys, files, tmp_path):
    out = tmp_path / "c.bp"
    code, obj = run_json(capsys, "selfcompose", files["m2"], "--q", "1", "--out", str(out))
    assert code == 0 and obj["holds"] is False and obj["copies"] == 3
    assert len(obj["counterexample"]["traces"]) == 3
    assert "assert" in out.read_text()


def test_noninterference(capsys, files):
    code, obj = run_json(capsys, "noninterference", files["m1"])
    assert code == 0 and obj["noninterferent"] is False and obj["witness"]["l"] == ""


def test_gadget_and_majsat(capsys, files):
    code, obj = run_json(capsys, "majsat", files["phi"], "--route", "ge")
    assert code == 0 and obj["verdict"] is True and obj["count"] == 5
    code, obj = run_json(capsys, "gadget", files["phi"], "--route", "BE1")
    assert code == 0 and "high Hp, Hpp, x1, x2, x3;" in obj["gadget"]


def test_dilute(capsys, files):
    code, obj = run_json(capsys, "dilute", files["traces"], "--t", "6")
    assert code == 0 and obj["GE"]["exact"] == "1/128" and obj["ME"]["logOf"] == "65/64"


def test_exit_codes(capsys, files):
    assert main([]) == 1
    assert main(["bound", files["m1"], "--problem", "NOPE", "--q", "1"]) == 1
    assert main(["bound", files["m1"], "--problem", "CC", "--q", "-1"]) == 1
    assert main(["analyze", files["bad"]]) == 1
    assert main(["analyze", "/nonexistent.bp"]) == 1
    assert main(["analyze", files["m2"], "--cap", "1"]) == 2
    capsys.readouterr()
    code, obj = run_json(capsys, "analyze", files["m2"], "--cap", "1")
    assert code == 2 and obj["error"]["type"] == "cap-exceeded"


def test_deterministic_output(capsys, files):
    argv = ["majsat", files["phi"], "--route", "SE", "--json"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_module_entry_point(files):
    r = subprocess.run(
        [sys.executable, "-m", "qifbound", "analyze", files["m1"]], capture_output=True, text=True, check=False
    )
    assert r.returncode == 0 and "ME" in r.stdout and "CC" in r.stdout
