import io
import json
import os
from pathlib import Path

import jsonschema
import pytest

from critmetric import cli, report

SCHEMA = json.loads((Path(__file__).parent.parent / "docs" / "report_schema.json").read_text())


def run(args, environ=None):
    out = io.StringIO()
    code = cli.main(list(args), environ=environ or {}, stdout=out)
    return code, out.getvalue()


def run_json(args, environ=None):
    code, text = run(list(args) + ["--json"], environ)
    rep = json.loads(text)
    jsonschema.validate(rep, SCHEMA)
    return code, rep, text


def checks(rep):
    return {c["name"]: c for c in rep["checks"]}


def test_verify_euclidean_ball_passes():
    code, rep, _ = run_json(["verify", "--model", "euclidean-ball", "--n", "3", "--r", "1", "--probes", "5"])
    assert code == 0 and rep["passed"]
    assert checks(rep)["miao-tam"]["max_residual"] <= 1e-10
    assert [c["name"] for c in rep["checks"]] == sorted(c["name"] for c in rep["checks"])


def test_verify_rejects_cap_beyond_equator():
    code, rep, _ = run_json(["verify", "--model", "spherical-cap", "--n", "4", "--r0", "1.6"])
    assert code == 2
    assert rep["error"]["type"] == "PreconditionViolation"


def test_verify_labels_non_critical_models():
    code, rep, _ = run_json(["verify", "--model", "perturbed-flat", "--n", "3", "--probes", "2"])
    assert checks(rep)["trace"]["premise"] == "conditional premise unverified"
    assert code == 1


def test_identities_dimension_errors():
    code, rep, _ = run_json(["identities", "--which", "weitzenbock", "--n", "3"])
    assert code == 2 and rep["error"]["type"] == "NotFourDimensional"


def test_identities_weitzenbock_trivial_branch():
    code, rep, _ = run_json(["identities", "--which", "weitzenbock", "--model", "spherical-cap",
                             "--n", "4", "--r0", "0.7", "--probes", "2"])
    w = checks(rep)["weitzenbock"]
    assert code == 0 and w["branch"].startswith("trivial") and w["error_estimate"] > 0


def test_identities_default_selection_skips_undefined_checks():
    code, rep, _ = run_json(["identities", "--model", "euclidean-ball", "--n", "3", "--probes", "1"])
    assert code == 0
    assert set(checks(rep)) == {"L1", "hamilton", "divfRm"}
    assert any("weitzenbock skipped" in w for w in rep["warnings"])


def test_isoperimetric_verdicts():
    code, rep, _ = run_json(["isoperimetric", "--model", "euclidean-ball", "--n", "3", "--r", "1"])
    c = checks(rep)
    assert code == 0
    assert c["area-bound"]["verdict"] == "equality" and c["isoperimetric-bound"]["verdict"] == "equality"
    code, rep, _ = run_json(["isoperimetric", "--model", "spherical-cap", "--n", "3", "--r0", "0.5"])
    assert code == 0 and checks(rep)["isoperimetric-bound"]["verdict"] == "strict"
    code, rep, _ = run_json(["isoperimetric", "--model", "hyperbolic-ball", "--n", "3", "--r0", "1"])
    c = checks(rep)
    assert code == 2
    assert c["area-bound"]["passed"] and c["isoperimetric-bound"]["verdict"] == "precondition violation"
    assert rep["summary"]["R"] == -6


def test_isoperimetric_needs_symmetric_model():
    code, rep, _ = run_json(["isoperimetric", "--model", "perturbed-flat", "--n", "3"])
    assert code == 2


def test_selftest_zero_trials_is_vacuous():
    code, rep, _ = run_json(["selftest", "--trials", "0"])
    assert code == 0 and rep["warnings"]
    assert all(c["trials"] == 0 for c in rep["checks"])


def test_selftest_reports_each_property():
    code, rep, _ = run_json(["selftest", "--seed", "42", "--trials", "50"])
    c = checks(rep)
    for name in ("det36", "iota-operator-norm", "kn-g-orthogonal", "ric-kn-identity", "ric-kn-bound",
                 "qw-bound", "weyl-pm-split"):
        assert c[name]["passed"], name
    # the literal interior-product statement is off by a factor 4 under the
    # full-contraction norm; it is reported as a failure, not hidden
    assert not c["iota"]["passed"] and abs(c["iota"]["max_error"] - 0.75) < 1e-9
    assert code == 1


def test_reports_are_byte_identical_and_round_trip():
    args = ["selftest", "--seed", "3", "--trials", "20"]
    _, _, a = run_json(args)
    _, _, b = run_json(args)
    assert a == b
    parsed = json.loads(a)
    assert json.loads(report.emit_json(parsed)) == parsed
    assert report.emit_json(parsed) == a


def test_timings_only_on_request():
    _, rep, _ = run_json(["selftest", "--trials", "1"])
    assert "timings" not in rep
    _, rep, _ = run_json(["selftest", "--trials", "1", "--timings"])
    assert rep["timings"]["selftest"] >= 0


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ntrials = 7\nseed = 11\ntol-det36 = 1e-3\njson = true\n", encoding="utf-8")
    code, text = run(["selftest", "--config", str(cfg), "--trials", "4"])
    rep = json.loads(text)
    assert rep["config"]["trials"] == 4  # flag beats file
    assert rep["config"]["seed"] == 11  # file beats default
    assert rep["config"]["tolerances"] == {"det36": 1e-3}
    assert checks(rep)["det36"]["tolerance"] == 1e-3


def test_config_file_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n", encoding="utf-8")
    assert run(["selftest", "--config", str(cfg)])[0] == 2
    assert run(["selftest", "--config", str(tmp_path / "missing.cfg")])[0] == 2
    assert run(["identities", "--which", "bogus"])[0] == 2
    with pytest.raises(SystemExit) as info:
        run(["verify", "--model", "torus"])
    assert info.value.code == 2


def test_persistence_and_environment(tmp_path):
    env = {report.OUTDIR_ENV: str(tmp_path / "env")}
    _, _, text = run_json(["selftest", "--trials", "2"], environ=env)
    latest = json.loads((tmp_path / "env" / "latest.json").read_text())
    saved = (tmp_path / "env" / latest["latest"]).read_text()
    assert saved == text and latest["latest"].endswith("-selftest.json")
    run_json(["selftest", "--trials", "2", "--outdir", str(tmp_path / "flag")], environ=env)
    assert (tmp_path / "flag" / "latest.json").exists()
    assert len([p for p in os.listdir(tmp_path / "env") if p != "latest.json"]) == 1
    run(["selftest", "--trials", "2"], environ=env)
    assert len([p for p in os.listdir(tmp_path / "env") if p != "latest.json"]) == 2


def test_text_output_and_models_list():
    code, text = run(["selftest", "--trials", "3"])
    assert "FAIL iota" in text and "OVERALL" in text
    code, text = run(["models", "list"])
    assert code == 0 and "perturbed-flat" in text
    code, text = run(["models", "list", "--json"])
    assert [m["name"] for m in json.loads(text)["models"]][0] == "euclidean-ball"


def test_convention_hash_is_stable():
    h = report.convention_hash()
    assert len(h) == 64 and h == report.convention_hash()
    assert report.CONVENTIONS["det_calibration"] == 1.0


def test_float_encoding():
    assert report.format_float(0.1) == "0.10000000000000001"
    assert report.format_float(2.0) == "2.0"
    assert report.format_float(float("inf")) == "null"
    assert float(report.format_float(1 / 3)) == 1 / 3
