import json
from pathlib import Path

import pytest

from warpcmc.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


HYP = """
name: {name}
space: {{tau: hyperbolic, m: 2, t_max: 30.0}}
graph: {{kind: cmc-radial, c: {c}}}
probes: {{radii: [0.5, 1.0, 2.0]}}
spectral: {{radii: [1.0, 5.0]}}
"""


def test_hyperbolic_cmc_end_to_end(tmp_path, capsys):
    cfg = write(tmp_path, HYP.format(name="h", c=0.5))
    assert main(["run", cfg, "--out", str(tmp_path / "o"), "--grid", "256"]) == 0
    report = json.loads((tmp_path / "o" / "h-report.json").read_text())
    assert report["summary"]["FAIL"] == 0
    assert all(h == pytest.approx(0.25, abs=1e-4) for h in report["observables"]["mean_curvature"]["norm_H"])
    for check in report["checks"]:
        assert {"name", "anchor", "value", "bound", "margin", "tolerance", "status"} <= set(check)
        assert check["anchor"] and check["status"] in ("PASS", "FAIL", "FLAGGED")
    assert (tmp_path / "o" / "h-scan.csv").exists()
    assert (tmp_path / "o" / "h-profile.csv").exists()
    assert "FAIL=0" in capsys.readouterr().out


def test_inadmissible_c_exits_with_c_zero(tmp_path, capsys):
    cfg = write(tmp_path, HYP.format(name="bad", c=1.5))
    assert main(["run", cfg, "--out", str(tmp_path)]) == 2
    assert "C0" in capsys.readouterr().err
    assert not (tmp_path / "bad-report.json").exists()


def test_constant_graph_passes(tmp_path):
    cfg = write(tmp_path, """
name: flat
space: {tau: euclidean, m: 3, t_max: 5.0}
fiber: {dim: 2}
graph: {kind: constant, value: [0.3, -1.0]}
spectral: {radii: [1.0]}
outputs: {formats: [json]}
""")
    assert main(["run", cfg, "--out", str(tmp_path), "--serial"]) == 0
    report = json.loads((tmp_path / "flat-report.json").read_text())
    assert report["summary"]["FAIL"] == 0
    assert max(report["observables"]["mean_curvature"]["norm_H"]) == 0.0
    assert not list(tmp_path.glob("*.csv"))


def test_reports_are_deterministic(tmp_path):
    cfg = write(tmp_path, HYP.format(name="d", c=0.3))
    docs = []
    for sub, extra in (("a", []), ("b", ["--serial"])):
        assert main(["run", cfg, "--out", str(tmp_path / sub), "--grid", "128"] + extra) == 0
        text = (tmp_path / sub / "d-report.json").read_text()
        doc = json.loads(text)
        doc["provenance"].pop("timestamp")
        docs.append(json.dumps(doc, sort_keys=True, indent=2))
    assert docs[0] == docs[1]


def test_output_directory_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path, HYP.format(name="env", c=0.5))
    monkeypatch.setenv("WARPCMC_OUT", str(tmp_path / "from-env"))
    assert main(["run", cfg, "--grid", "128"]) == 0
    assert (tmp_path / "from-env" / "env-report.json").exists()


def test_tight_tolerance_override_fails(tmp_path):
    cfg = write(tmp_path, HYP.format(name="tight", c=0.5))
    assert main(["run", cfg, "--out", str(tmp_path), "--grid", "128", "--tol", "1e-14"]) == 1


def test_config_errors_exit_two(tmp_path, capsys):
    cfg = write(tmp_path, "space: {tau: hyperbolic, m: 2}\ngraph: {kind: spiral}\n")
    assert main(["run", cfg]) == 2
    assert "graph.kind" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2
    assert main(["run", cfg, "--grid", "8"]) == 2


def test_list_builtins(capsys):
    assert main(["list-builtins"]) == 0
    out = capsys.readouterr().out
    for word in ("euclidean", "hyperbolic", "log-cosh", "dimension:", "coefficients=[0.0, 1.0, 0.0, 0.05]"):
        assert word in out


def test_verify_suites(tmp_path, capsys):
    assert main(["verify", "--suite", "smoke", "--out", str(tmp_path), "--grid", "256"]) == 0
    assert main(["verify", "--suite", "nonsense"]) == 2
    assert "unknown suite" in capsys.readouterr().err


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_pass(path, tmp_path):
    assert main(["run", str(path), "--out", str(tmp_path), "--grid", "256"]) == 0
