import json
import subprocess
import sys
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import (
    MODELS_DIR,
    assert_close,
    check_golden,
    cli_cases,
    polynomials,
    report_payload,
    run_cli,
    symmetric_matrices,
)
from degha.cli import REPORT_DIR_ENV, main
from degha.model import ModelError, default_primary_constraints, emit_model, model_from_dict, parse_model
from degha.poly import Polynomial, VariableTable

OSC = {
    "name": "osc",
    "m": 2,
    "a": [["1", "0"], ["0", "0"]],
    "b": ["0", "0"],
    "c": "-1/2*q1^2",
    "integrator": {"method": "rk4", "h": 0.001, "t_end": 1.5707963},
    "initial_state": {"q": [1, 0], "p": [0, 0]},
}


def with_(**kw):
    return {**OSC, **kw}


class TestParse:
    def test_valid(self):
        m = parse_model(json.dumps(OSC))
        assert m.m == 2 and m.n == 1 and m.a == [[1, 0], [0, 0]]
        assert str(m.c) == "-1/2*q1^2" and m.warnings == []
        assert m.integrator.method == "rk4" and m.start().q == (1.0, 0.0)

    def test_not_symmetric(self):
        with pytest.raises(ModelError) as info:
            model_from_dict(with_(a=[["1", "2"], ["0", "0"]]))
        assert "a" in info.value.path

    def test_bad_entry_path(self):
        with pytest.raises(ModelError) as info:
            model_from_dict(with_(a=[["1", "x"], ["x", "0"]]))
        assert info.value.path == "a[0][1]"

    def test_bad_json_location(self):
        with pytest.raises(ModelError) as info:
            parse_model('{"name": "x",\n "m": }')
        assert info.value.path.startswith("line 2")

    def test_zero_section_warning(self):
        m = model_from_dict(with_(b=["0", "3"]))
        assert len(m.warnings) == 1
        w = m.warnings[0]
        assert w["residual"] == ["0", "3"] and w["corrected_b"] == ["0", "0"]
        assert [str(x) for x in m.lagrangian().b] == ["0", "0"]

    @pytest.mark.parametrize("field,value,path", [
        ("m", 0, "m"),
        ("c", "p1*q1", "c"),
        ("b", ["p1", "0"], "b[0]"),
        ("integrator", {"method": "euler"}, "integrator.method"),
        ("integrator", {"h": -1}, "integrator.h"),
        ("sigma1", [["1", "0"], ["0", "0"]], "sigma1"),
        ("primary_constraints", ["0"], "primary_constraints[0]"),
    ])
    def test_field_errors(self, field, value, path):
        with pytest.raises(ModelError) as info:
            model_from_dict(with_(**{field: value}))
        assert info.value.path == path

    def test_missing_field(self):
        raw = dict(OSC)
        del raw["a"]
        with pytest.raises(ModelError, match="a"):
            model_from_dict(raw)

    def test_default_primary(self):
        m = model_from_dict(with_(a=[["1", "1"], ["1", "1"]], c="0"))
        assert [str(g) for g in default_primary_constraints(m)] == ["p1 - p2"]


class TestRoundTrip:
    @pytest.mark.parametrize("path", sorted(MODELS_DIR.glob("*.json")), ids=lambda p: p.stem)
    def test_bundled(self, path):
        m = parse_model(path.read_text())
        assert parse_model(emit_model(m)) == m

    @given(symmetric_matrices(1, 3), st.data())
    def test_random(self, a, data):
        n = len(a)
        table = VariableTable.phase_space(n)
        qs = [f"q{i + 1}" for i in range(n)]
        c = data.draw(polynomials(table, max_degree=2, variables=qs))
        raw = {"name": "r", "m": n, "a": [[str(x) for x in row] for row in a], "c": str(c)}
        m = model_from_dict(raw)
        back = parse_model(emit_model(m))
        assert back == m and back.c == c
        assert back.a == [[Fraction(x) for x in row] for row in a]


class TestCommands:
    def test_analyze_oscillator(self):
        rep, _ = run_cli("oscillator", "analyze")
        r = rep.results
        assert rep.passed and r["sigma0"] == [["1", "0"], ["0", "0"]]
        V = VariableTable.phase_space(2)
        assert Polynomial.parse(V, r["hamiltonian"]) == Polynomial.parse(V, "1/2*p1^2 + 1/2*q1^2")
        assert r["primary_constraints"] == ["p2"]

    def test_simulate_quarter_period(self):
        rep, art = run_cli("oscillator", "simulate", "--t-end", "1.5707963", "--h", "0.001")
        fin = rep.results["runs"][0]["final_state"]
        assert abs(fin["q"][0]) <= 1e-6 and abs(fin["p"][0] + 1) <= 1e-6
        assert list(art) == ["oscillator_trajectory.csv"]

    def test_dirac_chain(self):
        rep, _ = run_cli("coupled", "dirac")
        assert rep.passed
        assert rep.results["generations"] == [["p2"], ["q1"], ["p1"], ["q2"]]
        assert [c["class"] for c in rep.results["classification"]["constraints"]] == ["second"] * 4

    def test_kt(self):
        rep, _ = run_cli("oscillator", "kt", "--rmax", "4", "--degree", "4")
        assert rep.passed and rep.results["nilpotency"]["nilpotent"]
        h0 = rep.results["homology"][0]["table"]
        assert sum(r["h"] for r in h0 if r["d"] <= 2) == 15

    def test_brst(self):
        rep, _ = run_cli("oscillator", "brst", "--rmax", "1")
        assert rep.passed and rep.results["charge"] == "I*p2*cb2_1"
        assert rep.results["pairing_constant"] == "-I"

    def test_check_theorems(self):
        rep, _ = run_cli("oscillator", "check-theorems", "--t-end", "2")
        assert rep.passed
        names = [t["name"] for t in rep.results["theorems"]]
        assert "hamiltonian_map_gradient" in names and "constrained_hamiltonian_gauge_independent" in names

    def test_check_theorems_fails_on_tight_tolerance(self):
        rep, _ = run_cli("oscillator", "check-theorems", "--t-end", "2", "--energy-tol", "1e-30")
        assert not rep.passed


class TestExitCodes:
    def test_ok_and_report_dir(self, tmp_path, capsys):
        rc = main(["simulate", "--model", str(MODELS_DIR / "oscillator.json"), "--out", str(tmp_path), "--t-end", "0.1"])
        assert rc == 0
        report = json.loads((tmp_path / "oscillator_simulate.json").read_text())
        assert report == json.loads(capsys.readouterr().out)
        assert (tmp_path / "oscillator_trajectory.csv").read_text().startswith("t,q1,q2,p1,p2,constraint_norm")

    def test_env_dir(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(REPORT_DIR_ENV, str(tmp_path))
        assert main(["analyze", "--model", str(MODELS_DIR / "rank1.json")]) == 0
        assert (tmp_path / "rank1_analyze.json").exists()

    def test_check_failure(self, capsys):
        argv = ["check-theorems", "--model", str(MODELS_DIR / "oscillator.json"), "--t-end", "1", "--energy-tol", "1e-30"]
        assert main(argv) == 1

    def test_bad_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["analyze", "--model", str(p)]) == 2
        assert "line 1" in capsys.readouterr().err

    def test_not_symmetric(self, tmp_path, capsys):
        p = tmp_path / "ns.json"
        p.write_text(json.dumps(with_(a=[["1", "2"], ["0", "0"]])))
        assert main(["analyze", "--model", str(p)]) == 2

    def test_missing_file(self, tmp_path, capsys):
        assert main(["analyze", "--model", str(tmp_path / "nope.json")]) == 2

    def test_mechanics_only(self, capsys):
        assert main(["simulate", "--model", str(MODELS_DIR / "field_n2.json")]) == 2

    def test_bad_rmax(self, capsys):
        assert main(["kt", "--model", str(MODELS_DIR / "oscillator.json"), "--rmax", "0"]) == 2

    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate", "--model", "x"])
        assert info.value.code == 2

    def test_console_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "degha.cli", "analyze", "--model", str(MODELS_DIR / "oscillator.json")],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0 and json.loads(proc.stdout)["status"] == "pass"


class TestSweep:
    def test_parallel_matches_serial(self, tmp_path):
        sweep = tmp_path / "sweep.json"
        sweep.write_text(json.dumps([{"q": [1, 0], "p": [0, 0]}, {"q": [0.5, 2], "p": [0.1, 0]}, {"q": [0, 0], "p": [1, 0]}]))
        flags = ["--sweep", str(sweep), "--t-end", "0.5", "--h", "0.01"]
        serial, a1 = run_cli("oscillator", "simulate", *flags, "--jobs", "1")
        par, a2 = run_cli("oscillator", "simulate", *flags, "--jobs", "2")
        assert report_payload(serial)["results"] == report_payload(par)["results"]
        assert a1 == a2 and len(a1) == 3

    def test_bad_sweep(self, tmp_path, capsys):
        sweep = tmp_path / "sweep.json"
        sweep.write_text(json.dumps([{"q": [1], "p": [0, 0]}]))
        assert main(["simulate", "--model", str(MODELS_DIR / "oscillator.json"), "--sweep", str(sweep)]) == 2


@pytest.mark.parametrize("stem,command", cli_cases(), ids=lambda x: x)
def test_deterministic_and_golden(stem, command):
    first, art1 = run_cli(stem, command)
    second, art2 = run_cli(stem, command)
    assert report_payload(first) == report_payload(second)
    assert art1 == art2
    check_golden(stem, command, report_payload(first))


def test_assert_close_tolerates_rounding_only():
    assert_close({"x": [1.0, "a"]}, {"x": [1.0 + 1e-13, "a"]})
    with pytest.raises(AssertionError):
        assert_close({"x": 1.0}, {"x": 1.001})
    with pytest.raises(AssertionError):
        assert_close({"x": "a"}, {"x": "b"})
