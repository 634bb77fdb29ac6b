import json

import pytest

from calc import formatter
from calc.deformation import DeformParams
from calc.exceptions import ConfigError
from calc.report_bridge import SCHEMA_VERSION, build_check_report, render_markdown
from calc.utils import CheckReport
from data.reader import compare_golden, load_params, read_document, save_golden, load_golden

SETTINGS = {"order": 4, "thetas": 3, "tol": 1e-8, "nu": 1e-4, "seed": 1, "count": 2, "params": None}


def _checks():
    return [
        CheckReport("d2 m2_1 = 0", 3.2e-12, 1e-8, True),
        CheckReport("d2 m2_prod ≠ 0", 1.5e-7, 1e-4, False, expect="nonzero"),
    ]


def test_verdict_words():
    assert formatter.verdict(True) == "PASS"
    assert formatter.verdict(False) == "FAIL"
    assert formatter.verdict(None) == "UNCHECKED"


def test_markdown_table_escapes_pipes():
    text = formatter.to_markdown([["a", "b"], ["x|y", "1"]])
    assert text.splitlines()[0] == "| a | b |"
    assert "x\\|y" in text
    assert formatter.to_markdown([]) == ""


def test_jacobiator_grid_layout():
    cells = [
        {"i": 2, "j": 6, "expected": "J(m2_0, m2_9)", "passed": True},
        {"i": 6, "j": 7, "expected": "J(m2_0, m2_8)", "passed": False},
        {"i": 11, "j": 2, "expected": "?", "passed": None},
    ]
    grid = formatter.jacobiator_grid(cells)
    assert list(grid.index) == [2, 6, 11]
    assert grid.loc[2, 6] == "m9 ✓"
    assert grid.loc[6, 7] == "m8 ✗"
    assert grid.loc[11, 2] == "?"
    assert grid.loc[2, 7] == ""
    table = formatter.grid_to_table(grid)
    assert table[0] == ["i \\ j", "2", "6", "7"]


def test_check_report_envelope():
    report = build_check_report("verify-cocycles", _checks(), SETTINGS)
    assert report["schema"] == SCHEMA_VERSION
    assert report["passed"] is False
    assert report["first_failure"] == "d2 m2_prod ≠ 0"
    assert list(report["config"]) == sorted(SETTINGS)
    json.dumps(report)


def test_render_markdown_for_checks():
    text = render_markdown(build_check_report("verify-cocycles", _checks(), SETTINGS))
    assert text.startswith("# verify-cocycles")
    assert "**FAIL**" in text
    assert "首个失败项: d2 m2_prod ≠ 0" in text
    assert "| d2 m2_1 = 0 | 3.200e-12 |" in text


@pytest.mark.parametrize("name", ["resolvent.json", "even_shift.toml"])
def test_load_params_fixtures(name, params_dir):
    params = load_params(params_dir / name)
    assert isinstance(params, DeformParams)
    assert params.order == 4 and params.thetas == 3


def test_toml_fixture_carries_distribution(params_dir):
    params = load_params(params_dir / "even_shift.toml")
    assert len(params.M) == 1
    assert params.M[0][1].deltas == ((0.0, 0, 1.0),)


def test_read_document_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_document(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_document(broken)
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="顶层"):
        read_document(listing)


def test_golden_comparison_ignores_numbers(tmp_path):
    report = build_check_report("verify-cocycles", _checks(), SETTINGS)
    save_golden("verify-cocycles", report, tmp_path)
    golden = load_golden("verify-cocycles", tmp_path)
    golden["checks"][0]["residual"] = 9.9e-11
    assert compare_golden(report, golden) == []
    golden["checks"][1]["passed"] = True
    assert compare_golden(report, golden) == ["$.checks[1].passed: False ≠ True"]
    assert load_golden("coboundary-lemmas", tmp_path) is None
