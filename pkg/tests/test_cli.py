import json
import subprocess
import sys

import jsonschema
import pytest

from cmch.cli import PAPER_MAP, SCHEMA, SUITES, RunConfig, main, report_schema, run


def _verify(tmp_path, *args, name="r.json"):
    out = tmp_path / name
    code = main(["verify", *args, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


@pytest.fixture(scope="module")
def full_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "all.json"
    code = main(["verify", "--all", "-N", "0", "--seed", "3", "--out", str(out)])
    return code, json.loads(out.read_text())


def test_all_passes_and_matches_schema(full_report):
    code, rep = full_report
    assert code == 0 and rep["pass"]
    jsonschema.validate(rep, report_schema())
    assert rep["config"]["seed"] == 3 and rep["versions"]["artifact"]
    assert {r["suite"] for r in rep["records"]} >= set(SUITES) | {"k-stability"}
    assert rep["log_tau"] is not None


def test_labels_form_a_closed_vocabulary(full_report):
    _, rep = full_report
    used = {r["identity_label"] for r in rep["records"]}
    assert used <= set(PAPER_MAP)


def test_label_filter(tmp_path):
    code, rep = _verify(tmp_path, "-N", "0", "--suite", "eq:b2c2")
    assert code == 0
    assert rep["records"] and {r["identity_label"] for r in rep["records"]} == {"eq:b2c2"}
    assert main(["verify", "-N", "0", "--suite", "eq:nonexistent"]) == 2


def test_truncation_control_fails(tmp_path):
    code, rep = _verify(tmp_path, "-N", "1", "--suite", "truncationcontr")
    assert code == 1 and not rep["pass"]
    code, rep = _verify(tmp_path, "-N", "1", "--suite", "truncationcontr", "--ell", "2", name="ok.json")
    assert code == 0


@pytest.mark.parametrize("args", [
    ["-N", "1", "-K", "1", "--suite", "tau"],
    ["-N", "0", "--mode", "mixed", "--suite", "tau"],
    ["-N", "0", "--window", "3", "-3", "--suite", "tau"],
    ["-N", "0", "--tolerance", "0.1", "--suite", "tau"],
    ["-N", "0"],
])
def test_invalid_configurations_exit_2(args):
    assert main(["verify", *args]) == 2


def test_mixed_mode_is_flagged_experimental(tmp_path):
    code, rep = _verify(tmp_path, "-N", "0", "--mode", "mixed", "--experimental", "--suite", "hierarchy")
    assert "experimental" in rep and code in (0, 1)


def test_float_backend(tmp_path):
    code, rep = _verify(tmp_path, "-N", "0", "--backend", "float", "--tolerance", "1e-3", "--suite", "killing")
    assert code == 0 and rep["config"]["tolerance"] == 1e-3
    cfg = RunConfig(N=0, backend="float", suites=["hierarchy"]).validate()
    assert cfg.tolerance == 1e-6


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CMCH_SEED", "17")
    code, rep = _verify(tmp_path, "-N", "0", "--suite", "hierarchy")
    assert rep["config"]["seed"] == 17


def test_coeffs_table(tmp_path, capsys):
    assert main(["coeffs", "-N", "1", "--order", "9"]) == 0
    rep = json.loads(capsys.readouterr().out)
    rows = rep["rows"]
    assert len(rows) == 5
    # a^1 = 0, b^2 and c^2 nonzero
    assert rows[0]["a"] == ["0"] * 4
    assert rows[0]["b"] != ["0"] * 4 and rows[0]["c"] != ["0"] * 4


def test_schema_command(capsys):
    assert main(["schema"]) == 0
    assert json.loads(capsys.readouterr().out) == SCHEMA


def test_run_is_deterministic():
    a = run(RunConfig(N=0, seed=5, suites=["killing", "tau"]))
    b = run(RunConfig(N=0, seed=5, suites=["killing", "tau"]))
    assert json.dumps(a) == json.dumps(b)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cmch", "schema"], capture_output=True, text=True)
    assert proc.returncode == 0 and "records" in proc.stdout


def test_parallel_suites_give_identical_report():
    cfg = dict(N=0, seed=4, suites=["hierarchy", "killing", "tau"])
    a = run(RunConfig(**cfg))
    b = run(RunConfig(**cfg), jobs=3)
    assert json.dumps(a) == json.dumps(b)
