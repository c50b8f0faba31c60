import json
import subprocess
import sys

import pytest

import golden_cases
from spencer_mirror.cli import main
from spencer_mirror.config import ConfigError, RunConfig
from spencer_mirror.report import Report, compare_reports, mirror_report, verify_algebra

CHEAP = {"mesh": {"subdivisions": 1}, "max_sym_degree": 2, "c_str_samples": 2048}


@pytest.mark.parametrize("case", sorted(golden_cases.CASES))
def test_golden(case):
    expected = json.loads((golden_cases.GOLDEN / f"{case}.json").read_text())
    assert compare_reports(golden_cases.run_case(case), expected) == []


def test_golden_tracks_semisimple_nilpotency():
    data = json.loads((golden_cases.GOLDEN / "verify_su3.json").read_text())
    assert set(data["measurements"]["nilpotency_residuals"]) == {"1"}
    assert data["measurements"]["nilpotency_residuals"]["1"] > 0.1


def test_determinism():
    cfg = RunConfig.from_dict(CHEAP)
    a, b = mirror_report(cfg), mirror_report(cfg)
    assert a.without_timings() == b.without_timings()
    assert a.timings.keys() == b.timings.keys()


def test_report_json_roundtrip():
    rep = verify_algebra(RunConfig.from_dict({"algebra": "heisenberg3", "c_str_samples": 256}))
    back = Report.loads(rep.dumps())
    assert back.to_json() == rep.to_json()


def test_report_rejects_other_schema():
    with pytest.raises(ValueError):
        Report.from_json({"schema_version": 99})


def test_compare_reports_detects_changes():
    a = {"x": [1, 2.0], "timings": {"t": 1.0}, "s": "a"}
    assert compare_reports(a, {"x": [1, 2.0 + 1e-12], "timings": {"t": 5.0}, "s": "a"}) == []
    assert compare_reports(a, {"x": [2, 2.0], "timings": {}, "s": "a"})
    assert compare_reports(a, {"x": [1], "s": "a"})
    assert compare_reports(a, {"x": [1, 2.0], "s": "b"})


def test_config_roundtrip(tmp_path):
    cfg = RunConfig.from_dict({**CHEAP, "lambda": {"kind": "vector", "coeffs": [1, 2, 3]}})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert RunConfig.load(path) == cfg


@pytest.mark.parametrize("bad", [
    {"bogus": 1},
    {"mesh": {"subdivision": 2}},
    {"metric": "flat"},
    {"max_sym_degree": 0},
    {"lambda": {"kind": "vector"}},
    {"lambda": {"kind": "radial", "coeffs": [1]}},
    {"lam": {}, "lambda": {}},
    {"tolerances": {"identity": 1e-12, "wat": 0}},
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_lambda_dimension_checked():
    cfg = RunConfig.from_dict({"algebra": "su3"})
    with pytest.raises(ConfigError):
        cfg.lam.build(cfg.build_algebra())


def test_overrides():
    cfg = RunConfig().with_overrides(subdivisions=1, lambda0=0.5, metric="curvature", seed=None)
    assert cfg.mesh.subdivisions == 1
    assert cfg.lam.profile == "constant:0.5"
    assert cfg.metric == "curvature" and cfg.seed == 0


def test_csv_table():
    rep = Report("x", {}, per_sign={"plus": {"h": [1, 0, 1]}})
    assert rep.h_table_csv().splitlines() == ["sign,degree,h", "plus,0,1", "plus,1,0", "plus,2,1"]


def test_cli_mirror_report(tmp_path):
    out, csv = tmp_path / "r.json", tmp_path / "h.csv"
    code = main(["mirror-report", "--subdivisions", "1", "--max-sym-degree", "2",
                 "--out", str(out), "--csv", str(csv)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["per_sign"]["plus"]["h"] == rep["per_sign"]["minus"]["h"]
    assert csv.read_text().startswith("sign,degree,h")


def test_cli_stdout(capsys):
    assert main(["verify-algebra", "--algebra", "heisenberg3"]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "verify-algebra"


def test_cli_failed_identity_exit_code(tmp_path):
    # the degree-one operator-norm certificate fails for su3 (see ledger)
    assert main(["verify-algebra", "--algebra", "su3", "--out", str(tmp_path / "r.json")]) == 1


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"algebra": "so3", "extra": True}))
    assert main(["cohomology", "--config", str(path)]) == 2
    assert "unknown field" in capsys.readouterr().err


def test_cli_bad_algebra_exit_code(tmp_path):
    path = tmp_path / "alg.json"
    path.write_text(json.dumps({"name": "x", "dim": 2, "constants": [[0, 0, 1, 1.0]]}))
    assert main(["verify-algebra", "--algebra", str(path)]) == 2


def test_cli_gap_ambiguity_exit_code(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({**CHEAP, "tolerances": {"gap_min_ratio": 1e300}}))
    assert main(["cohomology", "--config", str(path)]) == 3
    assert "spectrum_head" in capsys.readouterr().err


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "spencer_mirror.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "mirror-report" in proc.stdout
