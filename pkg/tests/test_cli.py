import json
import subprocess
import sys
from collections import Counter

import pytest

from wnl import cli
from wnl.frontend import parse_expression

BAD_SKEW = "[system]\ncomponents = 1\n[operator.P]\nlocal.1.1 = D^2\n"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_jacobi_mkdv(capsys):
    code, out, _ = run(capsys, "jacobi", "mkdv.wnl", "--op", "P", "--engine", "both", "--assert-zero")
    assert code == 0
    assert "[P,P] [op]: ZERO" in out and "[P,P] [dist]: ZERO" in out


def test_compat_heisenberg(capsys):
    assert run(capsys, "compat", "heisenberg.wnl", "--ops", "P,Q", "--assert-zero")[0] == 0
    assert run(capsys, "schouten", "heisenberg", "--left", "Q", "--right", "P")[0] == 0


def test_perturbed_exits_3_with_witness(capsys):
    code, out, _ = run(capsys, "jacobi", "mkdv_perturbed.wnl", "--op", "P", "--assert-zero")
    assert code == 3
    assert out.count("NONZERO") == 2 and "witness" in out
    # without --assert-zero a nonzero bracket is not an error
    assert run(capsys, "jacobi", "mkdv_perturbed.wnl")[0] == 0


def test_usage_and_parse_errors(capsys, tmp_path):
    with pytest.raises(SystemExit) as e:
        cli.main(["jacobi"])
    assert e.value.code == 1
    assert run(capsys, "jacobi", str(tmp_path / "missing.wnl"))[0] == 1
    bad = tmp_path / "bad.wnl"
    bad.write_text("[system]\ncomponents = 1\n[operator.P]\nlocal.1.1 = D +\n")
    code, _, err = run(capsys, "parse", str(bad))
    assert code == 1 and "local.1.1" in err
    assert run(capsys, "jacobi", "heisenberg.wnl")[0] == 1  # two operators, no --op
    assert run(capsys, "compat", "heisenberg.wnl", "--ops", "P")[0] == 1
    assert run(capsys, "examples", "nope")[0] == 1


def test_validation_failure_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.wnl"
    bad.write_text(BAD_SKEW)
    code, _, err = run(capsys, "jacobi", str(bad))
    assert code == 2 and "skew" in err
    code, out, _ = run(capsys, "skew", str(bad))
    assert code == 2 and "NOT skew" in out


def test_disagreement_exits_4(capsys, monkeypatch):
    fake = [
        {"engine": "op", "verdict": "ZERO", "timing_ms": 0.0, "_text": "0"},
        {"engine": "dist", "verdict": "NONZERO", "witness": {}, "timing_ms": 0.0, "_text": "1"},
    ]
    monkeypatch.setattr(cli, "_run_engines", lambda P, Q, engine: fake)
    code, _, err = run(capsys, "jacobi", "mkdv.wnl")
    assert code == 4 and "disagree" in err


def test_parse_skew_flow_examples(capsys):
    code, out, _ = run(capsys, "parse", "wdvv.wnl", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["components"] == 3 and set(doc["operators"]) == {"P"}
    code, out, _ = run(capsys, "skew", "heisenberg.wnl")
    assert code == 0 and out.splitlines() == ["P: skew", "Q: skew"]
    code, out, _ = run(capsys, "flow", "mkdv.wnl", "--hamiltonian", "u1^2/2")
    assert code == 0 and out.startswith("u1_t = ")
    code, out, _ = run(capsys, "examples")
    assert "wdvv.wnl" in out.split()
    code, out, _ = run(capsys, "examples", "mkdv")
    assert "[operator.P]" in out


def _coefficients(doc):
    return [t["coeff"] for key, fam in doc.items() if key.endswith("_terms") for t in fam]


@pytest.mark.parametrize("engine", ["op", "dist"])
def test_json_round_trip(capsys, engine):
    code, out, _ = run(capsys, "jacobi", "mkdv_perturbed.wnl", "--engine", engine, "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["engine"] == engine and doc["verdict"] == "NONZERO"
    assert {"timing_ms", "witness", "local_terms"} <= set(doc)
    coeffs = _coefficients(doc)
    assert coeffs
    for s in coeffs:
        assert str(parse_expression(s, 1)) == s
    # text output carries the same coefficient multiset
    code, text, _ = run(capsys, "jacobi", "mkdv_perturbed.wnl", "--engine", engine)
    bracketed = [line.strip()[1:].split("] * ")[0] for line in text.splitlines()[1:] if line.strip().startswith("[")]
    assert Counter(bracketed) == Counter(coeffs)


def test_json_both(capsys):
    code, out, _ = run(capsys, "compat", "heisenberg.wnl", "--ops", "P,Q", "--format", "json")
    doc = json.loads(out)
    assert doc["engine"] == "both" and doc["agree"] and doc["verdict"] == "ZERO"
    assert [r["engine"] for r in doc["results"]] == ["op", "dist"]


def test_console_script_module():
    r = subprocess.run(
        [sys.executable, "-m", "wnl.cli", "jacobi", "mkdv", "--assert-zero"], capture_output=True, text=True
    )
    assert r.returncode == 0, r.stderr
