import json

import pytest

import config
import run_checks
from calc.exceptions import ConfigError
from run_checks import EXIT_CONFIG, EXIT_FAILED, RunConfig, main


@pytest.fixture(autouse=True)
def restore_config(monkeypatch):
    # run() 会把命令行参数写回 config
    for name in ("TRUNCATION_ORDER", "THETA_COUNT", "ZERO_TOL", "NONZERO_TOL", "DEFAULT_SEED"):
        monkeypatch.setattr(config, name, getattr(config, name))


@pytest.mark.parametrize(
    "kwargs, message",
    [
        ({"tol": 1e-6, "nu": 1e-8}, "nu"),
        ({"tol": 0.0}, "阈值"),
        ({"order": 0}, "K"),
        ({"thetas": 7}, "θ"),
        ({"count": 0}, "三元组"),
    ],
)
def test_run_config_rejects(kwargs, message):
    with pytest.raises(ConfigError, match=message):
        RunConfig("verify-cocycles", **kwargs).validate()


def test_deformation_commands_need_params():
    with pytest.raises(ConfigError, match="--params"):
        RunConfig("verify-deformation").validate()
    with pytest.raises(ConfigError, match="--params"):
        RunConfig("normalize-c4").validate()


def test_settings_leave_out_output_path(tmp_path):
    cfg = RunConfig("normalize-c4", params=tmp_path / "p.json", out=tmp_path)
    settings = cfg.settings()
    assert settings["params"] == "p.json"
    assert "out" not in settings


def test_bad_thresholds_exit_with_config_code(tmp_path):
    assert main(["verify-cocycles", "--tol", "1e-6", "--nu", "1e-8", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert not list(tmp_path.iterdir())


def test_missing_params_file_exits_with_config_code(tmp_path):
    code = main(["verify-deformation", "--params", str(tmp_path / "nope.json"), "--count", "1", "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_parity_violation_exits_with_config_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"c1": [[1, [], 1.0]]}), encoding="utf-8")
    code = main(["verify-deformation", "--params", str(bad), "--count", "1", "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG


def test_unknown_command_is_rejected_by_parser():
    with pytest.raises(SystemExit):
        run_checks.build_parser().parse_args(["deform-everything"])


@pytest.mark.slow
def test_violated_constraint_fails_verify_deformation(tmp_path, params_dir):
    code = main(
        [
            "verify-deformation",
            "--params",
            str(params_dir / "violate_c4_c5.json"),
            "--count",
            "2",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == EXIT_FAILED
    report = json.loads((tmp_path / "verify-deformation.json").read_text(encoding="utf-8"))
    assert report["first_failure"] == "约束 c4·c5 ≠ 0"
    assert report["constraints"]["family"] == "general"
    assert (tmp_path / "verify-deformation.md").exists()


def test_closed_form_and_invariance_commands_are_registered():
    assert {"closed-forms", "c4-invariance"} <= set(run_checks.COMMANDS)
    assert set(run_checks.RUNNERS) == set(run_checks.COMMANDS)
    assert run_checks.build_parser().parse_args(["closed-forms"]).command == "closed-forms"


@pytest.mark.slow
def test_closed_forms_command(tmp_path):
    code = main(["closed-forms", "--count", "2", "--out", str(tmp_path)])
    report = json.loads((tmp_path / "closed-forms.json").read_text(encoding="utf-8"))
    assert code == run_checks.EXIT_OK, report["first_failure"]
    assert len(report["checks"]) == 11
    assert report["checks"][0]["name"] == "J(1,3) closed form"
