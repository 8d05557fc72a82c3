from __future__ import annotations

import json
import subprocess
import sys

import pytest

from periodscope import cli

GOOD = """
name = "toy"
[toric]
A = [[1, 0, -1], [0, 1, -1]]
"""

BAD_INDEX = """
name = "bad"
[toric]
A = [[1, -1]]
B = [[2, -2]]
"""

BAD_PAIR = """
name = "bad"
[toric]
A = [[1, 1]]
B = [[1, 2]]
"""


def run(*argv):
    code, doc, _ = cli.run(list(argv))
    return code, doc


def shell(*argv):
    return subprocess.run([sys.executable, "-m", "periodscope.cli", *argv], capture_output=True, check=False)


def test_validate_input_file(tmp_path):
    p = tmp_path / "toy.toml"
    p.write_text(GOOD)
    code, doc = run("validate", "--input", str(p))
    assert code == 0
    assert doc["toric"]["valid"] is True
    assert doc["schema_version"]


@pytest.mark.parametrize("text, needle", [(BAD_INDEX, "index 2"), (BAD_PAIR, "A row 0 . B row 0 = 3")])
def test_validate_reports_failures(tmp_path, text, needle):
    p = tmp_path / "bad.toml"
    p.write_text(text)
    code, doc = run("validate", "--input", str(p))
    assert code == 1
    assert any(needle in m for m in doc["error"]["problems"])


def test_unknown_fixture_is_an_error():
    code, doc = run("gkz", "V999")
    assert code == 1
    assert doc["error"]["known"] == ["V229", "V238", "V286"]


def test_unknown_command_is_a_usage_error():
    code, doc = run("frobnicate", "V229")
    assert code == 1
    assert doc["error"]["type"] == "usage"


def test_missing_input_is_an_error():
    code, doc = run("gkz")
    assert code == 1
    assert "no input" in doc["error"]["message"]


def test_malformed_toml(tmp_path):
    p = tmp_path / "broken.toml"
    p.write_text("name = [")
    code, doc = run("validate", "--input", str(p))
    assert code == 1
    assert "error" in doc


def test_external_family_marks_toric_stages():
    code, doc = run("gkz", "V286")
    assert code == 0
    assert doc["gkz"] == {"status": "external input"}


def test_gkz_v229():
    code, doc = run("gkz", "V229")
    assert code == 0
    assert len(doc["gkz"]["operators"]) == 2


def test_discriminant_v238():
    code, doc = run("discriminant", "V238")
    assert code == 0
    comps = doc["discriminant"]["components"]
    assert set(comps) == {"z2+1", "z1^3*z2+z1^3+3*z1^2+3*z1+1"}


def test_degree_v286():
    code, doc = run("degree", "--fixture", "V286")
    assert code == 0
    assert doc["degree"]["degree"] == 1
    assert doc["degree"]["factorization"] == "1 x 1"


def test_out_file(tmp_path):
    out = tmp_path / "deg.json"
    assert cli.main(["degree", "V286", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["degree"]["degree"] == 1


def test_byte_reproducible_across_runs_and_seeds():
    a = shell("report", "V286")
    b = shell("report", "V286")
    c = shell("report", "V286", "--seed", "3")
    assert a.returncode == 0
    assert a.stdout == b.stdout == c.stdout
    doc = json.loads(a.stdout)
    assert doc["schema_version"]


def test_console_output_matches_run():
    proc = shell("discriminant", "V238")
    _, doc = run("discriminant", "V238")
    assert proc.stdout.decode() == cli.dumps(doc)
