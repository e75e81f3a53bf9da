import csv
import json
import math

import pytest

from heatlab.cli import build_parser, fmt, parse_grid, run


def test_grid_grammar():
    g = parse_grid("logspace:1e-4:10:15")
    assert len(g) == 15 and g[0] == 1e-4 and g[-1] == 10
    assert parse_grid("linspace:0.1:0.5:5") == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    assert parse_grid("0.3,0.1,0.2") == [0.1, 0.2, 0.3]
    for bad in ("logspace:0:1:3", "linspace:1:0.5:3", "a,b", "-1,2", "logspace:1:2"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_number_format_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 2.5e10, math.pi):
        assert float(fmt(x)) == x
        assert "e" in fmt(x)


def test_constants(tmp_path, capsys):
    assert run(["constants", "--m", "2"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["C"] == 4.0
    assert d["K1"] == pytest.approx(math.exp(-4) / 16, rel=1e-12)
    assert d["L1"] == d["K1"]
    assert d["c_m"] == pytest.approx(128 * math.pi, rel=1e-14)


def test_ball_csv(tmp_path):
    out = tmp_path / "ball.csv"
    assert run(["ball", "--m", "2", "--r", "1", "--t", "logspace:1e-4:10:15", "--tol", "1e-8", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "H", "H_err", "F", "F_err"]
    assert len(rows) == 16
    assert float(rows[1][1]) + float(rows[1][3]) == pytest.approx(math.pi)


def test_lattice_and_fit(tmp_path, capsys):
    out = tmp_path / "lat.csv"
    assert run(["lattice", "--m", "2", "--alpha", "1.5", "--t", "logspace:1e-5:1e-3:5", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["t", "value", "err", "regime", "predicted_exponent"]
    assert rows[0]["regime"] == "R3"
    assert run(["fit", str(out)]) == 0
    d = json.loads(capsys.readouterr().out)
    assert 0.4 < d["exponent"] < 0.7 and d["predicted_exponent"] == 0.5


def test_functionals_csv(tmp_path):
    out = tmp_path / "f.csv"
    assert run(["functionals", "--m", "2", "--t", "0.01,0.1", "--samples", "20000", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "g_mu", "g_mu_err", "g_nu", "g_nu_err"]
    assert float(rows[1][1]) + float(rows[1][3]) == pytest.approx(math.pi, rel=1e-12)


def test_verify_exit_codes(tmp_path):
    out = tmp_path / "r.json"
    assert run(["verify", "--theorem", "T1", "--t", "logspace:1e-3:1:4", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["theorem_id"] == "T1"
    assert {"t", "lower", "mid", "upper", "sigma", "pass"} <= set(rep["rows"][0])


def test_usage_errors(capsys):
    assert run(["ball", "--t", "nonsense"]) == 2
    assert run(["nosuchcommand"]) == 2
    assert run(["lattice", "--t", "1e-3"]) == 2
    assert run(["lattice", "--alpha", "0.1", "--t", "1e-3"]) == 2
    assert run(["constants", "--m", "1"]) == 2
    assert "error" in capsys.readouterr().err


def test_numeric_failure_exit_code():
    # the interaction bound makes a tiny eps uncertifiable at large t
    assert run(["lattice", "--m", "2", "--alpha", "0.7", "--t", "1.0", "--eps", "1e-12"]) == 3


def test_determinism_and_stamp(tmp_path):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    argv = ["verify", "--theorem", "T3ii", "--window", "1", "--t", "0.01,0.1", "--samples", "30000", "--seed", "7"]
    run(argv + ["--out", str(a)])
    run(argv + ["--threads", "3", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    run(argv + ["--stamp", "--out", str(c)])
    assert "generated_at" in json.loads(c.read_text())


def test_help_lists_subcommands():
    text = build_parser().format_help()
    for name in ("constants", "ball", "lattice", "functionals", "verify", "fit"):
        assert name in text


def test_seed_from_environment(monkeypatch, tmp_path):
    argv = ["functionals", "--t", "0.05", "--samples", "20000", "--alpha", "0.4", "--n-balls", "20"]
    run(argv + ["--seed", "5", "--out", str(tmp_path / "a")])
    monkeypatch.setenv("HEATLAB_SEED", "5")
    run(argv + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()
