import json
import os

import pytest
from click.testing import CliRunner

from damping_lab import cli

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_list_catalog():
    result = CliRunner().invoke(cli.main, ["list-catalog"])
    assert result.exit_code == 0
    assert "power_1_3" in result.output
    assert "constant" in result.output


def test_print_schema():
    result = CliRunner().invoke(cli.main, ["print-schema"])
    assert result.exit_code == 0
    for target in cli.TARGETS:
        assert target in result.output
    assert "t,B,l2,grad_l2,ut_l2,weighted_E,W,M" in result.output


def test_run_hypotheses_toml(tmp_path):
    cfg = _write(tmp_path, "h.toml", f"""
name = "h"
target = "hypotheses"
damping = "power_1_3"

[output]
dir = "{tmp_path}/art"
""")
    result = CliRunner().invoke(cli.main, ["run", cfg])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "art" / "h_hypotheses.json").exists()


def test_run_json_config(tmp_path):
    cfg = _write(tmp_path, "h.json", json.dumps({
        "name": "hj", "target": "hypotheses", "damping": "constant",
        "output": {"dir": str(tmp_path / "art")},
    }))
    result = CliRunner().invoke(cli.main, ["run", cfg])
    assert result.exit_code == 0, result.output


def test_run_malformed_config(tmp_path):
    cfg = _write(tmp_path, "bad.toml", "target = \"nope\"\n")
    result = CliRunner().invoke(cli.main, ["run", cfg])
    assert result.exit_code == 2
    assert "target" in result.output


def test_run_missing_field(tmp_path):
    cfg = _write(tmp_path, "bad2.toml", "target = \"hypotheses\"\n")
    result = CliRunner().invoke(cli.main, ["run", cfg])
    assert result.exit_code == 2
    assert "damping" in result.output


def test_run_missing_file():
    result = CliRunner().invoke(cli.main, ["run", "does_not_exist.toml"])
    assert result.exit_code == 2


def test_failing_hypotheses_run_exits_nonzero(tmp_path):
    cfg = _write(tmp_path, "edge.toml", f"""
name = "edge"
target = "hypotheses"

[damping]
kind = "PowerLaw"
mu = 1.0
kappa = 1.0

[output]
dir = "{tmp_path}/art"
""")
    result = CliRunner().invoke(cli.main, ["run", cfg])
    assert result.exit_code == 1


def test_deterministic_json_reports(tmp_path):
    cfg = _write(tmp_path, "gn.toml", f"""
name = "gnrep"
target = "gn"
dimension = 1
count = 10
seed = 5

[output]
dir = "{tmp_path}/art"
""")
    runner = CliRunner()
    assert runner.invoke(cli.main, ["run", cfg]).exit_code == 0
    first = (tmp_path / "art" / "gnrep_gn.json").read_bytes()
    assert runner.invoke(cli.main, ["run", cfg]).exit_code == 0
    second = (tmp_path / "art" / "gnrep_gn.json").read_bytes()
    assert first == second


def test_suite_summary(tmp_path):
    art = tmp_path / "art"
    _write(tmp_path, "a.toml", f"""
name = "a"
target = "hypotheses"
damping = "constant"

[output]
dir = "{art}"
""")
    _write(tmp_path, "suite.toml", 'scenarios = ["a.toml"]\n')
    result = CliRunner().invoke(cli.main,
                                ["suite", str(tmp_path / "suite.toml"),
                                 "--out", str(art)])
    assert result.exit_code == 0, result.output
    assert "PASS" in result.output
    summary = json.loads((art / "suite_summary.json").read_text())
    assert summary["passed"]
    assert len(summary["results"]) == 1


def test_empty_suite(tmp_path):
    _write(tmp_path, "suite.toml", "scenarios = []\n")
    result = CliRunner().invoke(cli.main,
                                ["suite", str(tmp_path / "suite.toml"),
                                 "--out", str(tmp_path / "art")])
    assert result.exit_code == 0


def test_suite_aggregates_failure(tmp_path):
    art = tmp_path / "art"
    _write(tmp_path, "edge.toml", f"""
name = "edge"
target = "hypotheses"

[damping]
kind = "PowerLaw"
mu = 1.0
kappa = 1.0

[output]
dir = "{art}"
""")
    _write(tmp_path, "suite.toml", 'scenarios = ["edge.toml"]\n')
    result = CliRunner().invoke(cli.main,
                                ["suite", str(tmp_path / "suite.toml"),
                                 "--out", str(art)])
    assert result.exit_code == 1
    assert "FAIL" in result.output


def test_shipped_scenarios_parse():
    for name in os.listdir(SCENARIO_DIR):
        if name.endswith(".toml") and name != "suite.toml":
            cfg = cli.load_config(os.path.join(SCENARIO_DIR, name))
            assert "target" in cfg, name


def test_threads_env(monkeypatch):
    monkeypatch.setenv("DAMPING_LAB_THREADS", "2")
    assert cli._threads() == 2
    monkeypatch.setenv("DAMPING_LAB_THREADS", "bogus")
    assert cli._threads() >= 1


def test_figures_rendered_next_to_csv(tmp_path):
    cfg = _write(tmp_path, "z.toml", f"""
name = "z"
target = "zones"
damping = "power_1_3"
n_t = 30
n_xi = 30

[output]
dir = "{tmp_path}/art"
""")
    result = CliRunner().invoke(cli.main, ["run", cfg])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "art" / "z_zones.csv").exists()
    assert (tmp_path / "art" / "z_zones.png").exists()
