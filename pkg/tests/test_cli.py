import csv
import json

import jsonschema
import pytest
from click.testing import CliRunner

from qwhit import harness as H
from qwhit.cli import main, parse_complex
from qwhit.qdilog import ModularParameter, c_function, phi


@pytest.fixture
def runner():
    return CliRunner()


def numbers(out):
    re, im = out.split()
    return complex(float(re), float(im))


def test_parse_complex():
    assert parse_complex("0.2+0.3i") == 0.2 + 0.3j
    assert parse_complex("-0.1-2e-3j") == -0.1 - 0.002j
    assert parse_complex("0.4i") == 0.4j
    assert parse_complex("1.5") == 1.5


def test_phi_and_cfun(runner):
    r = runner.invoke(main, ["phi", "--b", "1", "--z", "0.3+0.1i"])
    assert r.exit_code == 0
    assert numbers(r.output) == pytest.approx(phi(0.3 + 0.1j, ModularParameter(1.0)), rel=1e-9)
    r = runner.invoke(main, ["cfun", "--b", "0.8", "--z", "0.2+0.5i", "--json"])
    d = json.loads(r.output)
    assert complex(d["re"], d["im"]) == pytest.approx(c_function(0.2 + 0.5j, ModularParameter(0.8)), rel=1e-9)


def test_phi_at_pole_exits_2(runner):
    r = runner.invoke(main, ["phi", "--b", "1", "--z", "1i"])
    assert r.exit_code == 2 and "PoleProximity" in r.output


def test_bad_complex(runner):
    r = runner.invoke(main, ["phi", "--b", "1", "--z", "abc"])
    assert r.exit_code == 2


def test_measure(runner):
    r = runner.invoke(main, ["measure", "--b", "1", "--lambda", "0.7,0.7"])
    assert r.exit_code == 0 and numbers(r.output) == 0


def test_whittaker(runner):
    args = ["whittaker", "--b", "1", "--n", "2", "--lambda", "0.3,-0.2", "--x", "0.1,0.5"]
    g = numbers(runner.invoke(main, args).output)
    m = numbers(runner.invoke(main, args + ["--method", "mb"]).output)
    assert g == pytest.approx(0.046045602450397426 - 0.12484517113631181j, rel=1e-9)
    assert m == pytest.approx(g, rel=1e-9)
    r = runner.invoke(main, ["whittaker", "--b", "1", "--n", "2", "--lambda", "0.3", "--x", "0.1,0.5"])
    assert r.exit_code == 2


def test_identity(runner):
    r = runner.invoke(main, ["identity", "fourier1", "--b", "1", "--trials", "2", "--json", "--control"])
    assert r.exit_code == 0
    doc = json.loads(r.output)
    jsonschema.validate(doc, H.REPORT_SCHEMA)
    assert len(doc) == 3 and doc[-1]["control"]
    r = runner.invoke(main, ["identity", "beta1", "--b", "1", "--tol", "1e-30"])
    assert r.exit_code == 1
    r = runner.invoke(main, ["identity", "nope", "--b", "1"])
    assert r.exit_code == 2


def test_suite_subset_json(runner, tmp_path, monkeypatch):
    # restrict the registry so the command stays fast
    keep = {k: v for k, v in H.CASES.items() if k in ("fourier2", "measure-recursion:n3")}
    monkeypatch.setattr(H, "CASES", keep)
    out = tmp_path / "r.json"
    r = runner.invoke(main, ["suite", "--profile", "quick", "--json", str(out), "--quiet"])
    assert r.exit_code == 0, r.output
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, H.REPORT_SCHEMA)
    assert "0 failed" in r.output


def test_scan(runner, tmp_path):
    out = tmp_path / "scan.csv"
    r = runner.invoke(main, ["scan", "--b", "1", "--lambda", "0.3,-0.2", "--x-grid", "-0.5:0.5:2,0:0.5:3", "--out", str(out)])
    assert r.exit_code == 0, r.output
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x1", "x2", "re", "im", "abs"]
    assert len(rows) == 1 + 2 * 3
    x1, x2, re, im, ab = map(float, rows[-1])
    assert (x1, x2) == (0.5, 0.5) and ab == pytest.approx(abs(complex(re, im)))


def test_config_option(runner, tmp_path):
    cfgfile = tmp_path / "c.ini"
    cfgfile.write_text("[tolerances]\nfourier1 = 1e-30\n")
    r = runner.invoke(main, ["--config", str(cfgfile), "identity", "fourier1", "--b", "1", "--trials", "1"])
    assert r.exit_code == 1
