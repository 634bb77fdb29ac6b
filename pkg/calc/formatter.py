"""报告格式化函数：把检查结果整理成表格行与 markdown 文本。"""

from typing import Any, Dict, Iterable, List, Optional

import pandas as pd


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    try:
        return f"{float(value):.3e}"
    except (TypeError, ValueError):
        return str(value)


def verdict(passed: Optional[bool]) -> str:
    if passed is None:
        return "UNCHECKED"
    return "PASS" if passed else "FAIL"


def format_checks(checks: Iterable[Dict[str, Any]]) -> List[List[str]]:
    table = [["检查", "残差", "阈值", "期望", "结论"]]
    for check in checks:
        table.append(
            [
                str(check.get("name", "")),
                _fmt(check.get("residual")),
                _fmt(check.get("tol")),
                "≈0" if check.get("expect", "zero") == "zero" else "≠0",
                verdict(check.get("passed")),
            ]
        )
    return table


def _cell_text(cell: Dict[str, Any]) -> str:
    expected = cell["expected"]
    if expected.startswith("J(m2_0, m2_"):
        expected = "m" + expected[len("J(m2_0, m2_") : -1]
    if cell.get("passed") is None:
        return expected
    mark = "✓" if cell["passed"] else "✗"
    return f"{expected} {mark}"


def jacobiator_grid(cells: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    """按 (i, j) 排成方阵，空位留空字符串。"""

    frame = pd.DataFrame([{"i": c["i"], "j": c["j"], "text": _cell_text(c)} for c in cells])
    if frame.empty:
        return pd.DataFrame()
    grid = frame.pivot(index="i", columns="j", values="text").fillna("")
    return grid.sort_index().sort_index(axis=1)


def grid_to_table(grid: pd.DataFrame) -> List[List[str]]:
    if grid.empty:
        return []
    table = [["i \\ j"] + [str(j) for j in grid.columns]]
    for i, row in grid.iterrows():
        table.append([str(i)] + [str(v) for v in row.tolist()])
    return table


def format_constraints(relations: Iterable[Dict[str, Any]]) -> List[List[str]]:
    table = [["约束", "乘积", "最低 ℏ 阶", "结论"]]
    for r in relations:
        order = r.get("hbar_order")
        table.append(
            [
                r["relation"],
                r.get("product", "0"),
                "-" if order is None else str(order),
                verdict(r.get("holds")),
            ]
        )
    return table


def format_orders(order_report: Dict[str, Any]) -> List[List[str]]:
    table = [["ℏ 阶", "残差", "结论"]]
    tol = float(order_report.get("tol", 0.0))
    for power, value in order_report.get("residuals", {}).items():
        table.append([str(power), _fmt(value), verdict(float(value) < tol)])
    return table


def format_params(described: Dict[str, str]) -> List[List[str]]:
    return [["参数", "值"]] + [[k, v] for k, v in described.items()]


def to_markdown(table: List[List[str]]) -> str:
    if not table:
        return ""
    header, *rows = table
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for row in rows:
        lines.append("| " + " | ".join(cell.replace("|", "\\|") for cell in row) + " |")
    return "\n".join(lines)
