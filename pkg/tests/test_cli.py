import copy
import csv
import json
import math
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from weaklab.cli import CSV_COLUMNS, main, outcome
from weaklab.errors import ConfigError
from weaklab.scenario import BUILTINS, load_scenario, parse_scenario, suite


@pytest.fixture(scope="module")
def schema():
    return json.loads(resources.files("weaklab").joinpath("report_schema.json").read_text())


def _scenario_file(tmp_path, **changes):
    d = copy.deepcopy(BUILTINS["euclid1d_indicator"])
    d.update(changes)
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(d))
    return path


def test_run_builtin(tmp_path, schema, capsys):
    out, curve = tmp_path / "r.json", tmp_path / "c.csv"
    assert main(["run", "--scenario", "euclid1d_indicator", "--out", str(out), "--csv", str(curve)]) == 0
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, schema)
    assert rep["limit"]["value"] == pytest.approx(4.0, rel=5e-3)
    assert rep["timing"] is None and rep["outcome"] == "pass"
    rows = list(csv.reader(curve.open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + 48
    assert float(rows[1][0]) == pytest.approx(1e-3) and rows[1][4] == "exact_1d"
    assert "PASS" in capsys.readouterr().out


def test_run_expected_failure_exits_zero(tmp_path, schema):
    out = tmp_path / "r.json"
    assert main(["run", "--scenario", "example_3_2_no_upper_bound", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, schema)
    st = {v["claim"]: v["status"] for v in rep["verdicts"]}
    assert st["upper"] == "fail" and st["lower"] == "pass"
    assert "regularity" in rep


def test_run_verdict_failure_exits_one(tmp_path):
    path = _scenario_file(tmp_path, space={"kind": "euclidean", "dim": 1, "profile": {"C_A": 0.5, "AVR": 2}})
    assert main(["run", "--scenario", str(path), "--out", str(tmp_path / "r.json")]) == 1


@pytest.mark.parametrize("change,field", [
    ({"growth": {"kind": "exponential"}}, "growth.kind"),
    ({"space": {"kind": "sphere"}}, "space.kind"),
    ({"function": {"kind": "bump"}}, "function.kind"),
    ({"seed": None}, "seed"),
    ({"version": 2}, "version"),
    ({"theorem": "bbm"}, "theorem"),
    ({"method": "monte_carlo", "budget": 100}, "budget"),
    ({"colour": "red"}, "scenario"),
])
def test_config_errors_exit_two(tmp_path, capsys, change, field):
    path = _scenario_file(tmp_path, **change)
    assert main(["run", "--scenario", str(path), "--out", str(tmp_path / "r.json")]) == 2
    assert field in capsys.readouterr().err


def test_missing_seed_key(tmp_path):
    d = copy.deepcopy(BUILTINS["euclid1d_indicator"])
    del d["seed"]
    with pytest.raises(ConfigError) as exc:
        parse_scenario(d)
    assert exc.value.field == "seed"


def test_unknown_scenario_and_bad_json(tmp_path):
    assert main(["run", "--scenario", "no_such_thing", "--out", str(tmp_path / "r.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--scenario", str(bad), "--out", str(tmp_path / "r.json")]) == 2


def test_unknown_suite():
    assert main(["verify", "--suite", "nightly"]) == 2
    with pytest.raises(ConfigError):
        suite("nightly")


def test_regularity_subcommand(tmp_path, schema):
    out = tmp_path / "g.json"
    assert main(["regularity", "--scenario", "euclid2d_disk", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, schema)
    assert rep["regularity"]["avr"]["value"] == pytest.approx(math.pi, rel=5e-3)


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in BUILTINS)


def test_run_determinism_across_workers(tmp_path, monkeypatch):
    a, b, c = (tmp_path / f"{k}.json" for k in "abc")
    assert main(["run", "--scenario", "euclid1d_mc", "--out", str(a), "--workers", "1"]) == 0
    assert main(["run", "--scenario", "euclid1d_mc", "--out", str(b), "--workers", "8"]) == 0
    monkeypatch.setenv("WEAKLAB_WORKERS", "4")
    assert main(["run", "--scenario", "euclid1d_mc", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_bad_worker_env(tmp_path, monkeypatch):
    monkeypatch.setenv("WEAKLAB_WORKERS", "many")
    assert main(["run", "--scenario", "euclid1d_mc", "--out", str(tmp_path / "r.json")]) == 2


def test_timing_flag(tmp_path, schema):
    out = tmp_path / "r.json"
    assert main(["run", "--scenario", "finite_interval", "--out", str(out), "--timing"]) == 0
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, schema)
    assert rep["timing"]["seconds"] >= 0


def test_outcome_rule():
    v = [{"claim": "upper", "status": "fail"}, {"claim": "lower", "status": "expected-fail"}]
    assert outcome(v, {"upper": "fail"}) == "pass"
    assert outcome(v, {}) == "fail"
    assert outcome(v, {"upper": "fail", "lower": "pass"}) == "fail"


def test_builtins_parse_and_echo():
    for name in BUILTINS:
        sc = load_scenario(name)
        assert sc.echo() == BUILTINS[name]
        assert sc.seed == 20240917
    assert set(suite("fast")) <= set(suite("full"))


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "weaklab.cli", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "euclid1d_indicator" in res.stdout
