"""报告桥接层。

把计算层产出的 CheckReport、TableReport、ConstraintReport、OrderReport 转换成
结构稳定的字典（写成 JSON）以及对应的 markdown 文本。字段约定见 docs/report-schema.md。
"""

from __future__ import annotations

from typing import Any, Dict, Iterable, List, Optional

import config

from . import formatter
from .cohomology import TableReport
from .deformation import BasisChange, ConstraintReport, DeformParams, OrderReport
from .utils import CheckReport, round_sig


SCHEMA_VERSION = 1


def _get_config(name: str, default: Any) -> Any:
    """读取配置模块中的字段，缺失时返回默认值。"""

    return getattr(config, name, default)


def _envelope(command: str, settings: Dict[str, Any], passed: bool) -> Dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "command": command,
        "passed": bool(passed),
        "config": dict(sorted(settings.items())),
    }


def build_check_report(command: str, checks: Iterable[CheckReport], settings: Dict[str, Any]) -> Dict[str, Any]:
    """一组独立检查（上闭链、恰当性、引理、幂零性）的报告。"""

    rows = [c.to_dict() for c in checks]
    report = _envelope(command, settings, all(r["passed"] for r in rows))
    report["checks"] = rows
    failing = [r["name"] for r in rows if not r["passed"]]
    report["first_failure"] = failing[0] if failing else None
    return report


def build_table_report(table: TableReport, settings: Dict[str, Any]) -> Dict[str, Any]:
    cells = []
    for (i, j), cell in sorted(table.cells.items()):
        row = cell.to_dict()
        if row["residual"] is not None:
            row["residual"] = round_sig(row["residual"])
        cells.append(row)
    report = _envelope("jacobiator-table", settings, table.passed)
    report["distribution"] = table.distribution
    report["calibration"] = table.calibration.to_dict()
    for key, value in report["calibration"]["overlaps"].items():
        report["calibration"]["overlaps"][key] = round_sig(value)
    report["cells"] = cells
    report["sum_identity"] = table.sum_identity.to_dict()
    failures = [f"J({c.i},{c.j})" for c in table.failures()]
    if not table.sum_identity.passed:
        failures.append(table.sum_identity.name)
    report["first_failure"] = failures[0] if failures else None
    return report


def build_deformation_report(
    params: DeformParams,
    constraints: ConstraintReport,
    orders: OrderReport,
    settings: Dict[str, Any],
) -> Dict[str, Any]:
    """约束检查与逐阶 Jacobi 一起给出；两者都通过才算通过。"""

    report = _envelope("verify-deformation", settings, constraints.passed and orders.passed)
    report["params"] = params.describe()
    report["constraints"] = constraints.to_dict()
    report["jacobi"] = orders.to_dict()
    violated = [r["relation"] for r in constraints.violations()]
    if violated:
        report["first_failure"] = f"约束 {violated[0].replace(' = 0', '')} ≠ 0"
    elif not orders.passed:
        report["first_failure"] = f"Jacobi 在 ℏ^{orders.first_failing_order} 阶不成立"
    else:
        report["first_failure"] = None
    return report


def build_normalize_report(
    before: DeformParams,
    after: DeformParams,
    change: BasisChange,
    verdicts: Optional[Dict[str, Any]],
    settings: Dict[str, Any],
) -> Dict[str, Any]:
    """c₄ 归一化前后的参数与换基矩阵；verdicts 记录前后逐阶判定是否一致。"""

    consistent = True if verdicts is None else bool(verdicts.get("consistent", False))
    report = _envelope("normalize-c4", settings, consistent)
    report["before"] = before.describe()
    report["after"] = after.describe()
    report["basis_change"] = change.to_dict()
    report["verdicts"] = verdicts
    report["first_failure"] = None if consistent else "换基前后判定不一致"
    return report


def build_selftest_report(sections: Dict[str, Dict[str, Any]], settings: Dict[str, Any]) -> Dict[str, Any]:
    passed = all(s["passed"] for s in sections.values())
    report = _envelope("selftest", settings, passed)
    report["sections"] = sections
    failing = [name for name, s in sections.items() if not s["passed"]]
    report["first_failure"] = failing[0] if failing else None
    return report


# ---------------------------------------------------------------------------
# markdown
# ---------------------------------------------------------------------------


def _section(title: str, table: List[List[str]]) -> str:
    return f"## {title}\n\n{formatter.to_markdown(table)}\n"


def render_markdown(report: Dict[str, Any]) -> str:
    """按命令类型渲染 markdown；selftest 递归渲染各段。"""

    command = report["command"]
    lines = [f"# {command}", "", f"结论: **{formatter.verdict(report['passed'])}**", ""]
    if report.get("first_failure"):
        lines += [f"首个失败项: {report['first_failure']}", ""]
    if "checks" in report:
        lines.append(_section("检查", formatter.format_checks(report["checks"])))
    if "cells" in report:
        grid = formatter.jacobiator_grid(report["cells"])
        lines.append(_section(f"Jacobiator 表（M = {report['distribution']}）", formatter.grid_to_table(grid)))
        lines.append(_section("和恒等式", formatter.format_checks([report["sum_identity"]])))
        signs = report["calibration"]["signs"]
        lines.append(_section("归一化符号", [["形式", "符号"]] + [[k, f"{v:+.0f}"] for k, v in signs.items()]))
    if "constraints" in report:
        lines.append(_section("参数", formatter.format_params(report["params"])))
        lines.append(_section(f"约束（{report['constraints']['family']}）", formatter.format_constraints(report["constraints"]["relations"])))
        for warning in report["constraints"]["filtration_warnings"]:
            lines.append(f"- 过滤警告: {warning}")
        lines.append(_section("逐阶 Jacobi", formatter.format_orders(report["jacobi"])))
    if command == "normalize-c4":
        lines.append(_section("换基前", formatter.format_params(report["before"])))
        lines.append(_section("换基后", formatter.format_params(report["after"])))
    if "sections" in report:
        for section in report["sections"].values():
            lines.append(render_markdown(section).replace("\n# ", "\n## ", 1))
    return "\n".join(lines).rstrip() + "\n"
