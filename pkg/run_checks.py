"""
批量验证入口

子命令:
  verify-cocycles      反括号 Jacobi、d₂m₂|ᵢ = 0、m₂|₇ 的恰当性与乘积反例
  jacobiator-table     成对 Jacobiator 表（0 / * / 关系格子）与和恒等式
  verify-deformation   约束检查 + 逐阶 Jacobi（--params 指定参数文件）
  normalize-c4         θ 换基把 c₄ 化成 ℏ^s c′ θ₁θ₂，并比较换基前后的判定
  coboundary-lemmas    上边缘引理、d₂d₁ = 0 与 d₂/Jacobiator 桥接恒等式
  closed-forms         按定义算出的 J_{i,j} 与闭式逐项比较
  c4-invariance        五组参数在 c₄ 归一化换基前后的判定是否一致
  selftest             以上全部（normalize-c4 除外）加上形变族、约束必要性检查

退出码: 0 全部通过，1 有检查失败，2 配置错误。
报告写到 --out 目录下的 <子命令>.json 与 <子命令>.md；--bless 时同时更新金标准文件。
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import config
from calc import closed_forms, cohomology, deformation
from calc.antibracket import Distribution, FormId, ProductForm, canonical_distributions
from calc.exceptions import AntibracketError, ConfigError
from calc.report_bridge import (
    build_check_report,
    build_deformation_report,
    build_normalize_report,
    build_selftest_report,
    build_table_report,
    render_markdown,
)
from calc.testfns import TestSet, build_test_set
from data.reader import compare_golden, load_golden, load_params, save_golden, write_json, write_text


logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(message)s")

COMMANDS = (
    "verify-cocycles",
    "jacobiator-table",
    "verify-deformation",
    "normalize-c4",
    "coboundary-lemmas",
    "closed-forms",
    "c4-invariance",
    "selftest",
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class RunConfig:
    command: str
    order: int = config.TRUNCATION_ORDER
    thetas: int = config.THETA_COUNT
    tol: float = config.ZERO_TOL
    nu: float = config.NONZERO_TOL
    seed: int = config.DEFAULT_SEED
    count: int = config.TRIPLE_COUNT
    params: Optional[Path] = None
    out: Path = field(default_factory=lambda: Path(config.REPORTS_DIR))
    bless: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"未知子命令: {self.command}")
        if self.tol <= 0 or self.nu <= 0:
            raise ConfigError(f"阈值必须为正: tol={self.tol}, nu={self.nu}")
        if self.nu <= self.tol:
            raise ConfigError(f"nu 必须大于 tol: nu={self.nu}, tol={self.tol}")
        if self.order < 1:
            raise ConfigError(f"截断阶数 K 至少为 1: {self.order}")
        if not 1 <= self.thetas <= 6:
            raise ConfigError(f"θ 生成元个数必须在 1..6 之间: {self.thetas}")
        if self.count < 1:
            raise ConfigError(f"三元组个数至少为 1: {self.count}")
        if self.command in ("verify-deformation", "normalize-c4") and self.params is None:
            raise ConfigError(f"{self.command} 需要 --params")

    def settings(self) -> Dict[str, Any]:
        """写进报告的配置；不含输出路径，保证换目录运行报告不变。"""

        return {
            "order": self.order,
            "thetas": self.thetas,
            "tol": self.tol,
            "nu": self.nu,
            "seed": self.seed,
            "count": self.count,
            "params": None if self.params is None else Path(self.params).name,
        }


def _apply_overrides(cfg: RunConfig) -> None:
    # 各模块通过 _get_config 读取这些字段
    config.TRUNCATION_ORDER = cfg.order
    config.THETA_COUNT = cfg.thetas
    config.ZERO_TOL = cfg.tol
    config.NONZERO_TOL = cfg.nu
    config.DEFAULT_SEED = cfg.seed


def _banner(title: str) -> None:
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


def _step(n: int, text: str) -> None:
    print(f"\n[{n}] {text}...")


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------


def run_verify_cocycles(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    _step(1, "反括号 Jacobi 恒等式")
    checks = [cohomology.check_undeformed_jacobi(tests, cfg.tol)]

    _step(2, "m2_1..m2_6 上闭链条件")
    for i in range(1, 7):
        checks.append(cohomology.verify_cocycle(FormId(i), tests, cfg.tol))

    _step(3, "m2_7(M) 对三个典型分布")
    for M in canonical_distributions():
        checks.append(cohomology.verify_cocycle(FormId(7, M), tests, cfg.tol))

    _step(4, "m2_7(M) = d1 M（M 属于 E′）")
    for M in canonical_distributions():
        if M.in_E_prime:
            checks.append(cohomology.verify_exactness_m7(M, tests, cfg.tol))

    _step(5, "反例：乘积不是上闭链")
    checks.append(cohomology.verify_cocycle(ProductForm(), tests, expect="nonzero", nu=cfg.nu))
    for c in checks:
        print(f"   {'✓' if c.passed else '✗'} {c.name}: {c.residual:.3e}")
    return build_check_report("verify-cocycles", checks, cfg.settings())


def run_jacobiator_table(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    _step(1, "校准 m2_8..m2_11 的符号并逐格计算")
    table = cohomology.jacobiator_table(tests, Distribution.delta(0.0), cfg.tol, cfg.nu)
    failures = table.failures()
    print(f"   ✓ {len(table.cells)} 格，失败 {len(failures)} 格")
    return build_table_report(table, cfg.settings())


def run_verify_deformation(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    _step(1, "读取参数")
    params = load_params(cfg.params)
    for name, value in params.describe().items():
        print(f"   {name} = {value}")

    _step(2, "约束检查")
    constraints = deformation.check_constraints(params)
    print(f"   形变族: {constraints.family}")
    for r in constraints.violations():
        print(f"   ✗ 约束 {r['relation'].replace(' = 0', '')} ≠ 0")

    _step(3, "逐阶 Jacobi")
    order = min(cfg.order, params.order)
    orders = deformation.verify_jacobi_orderwise(deformation.build_deformation(params), tests, order, cfg.tol)
    print(f"   {'✓' if orders.passed else '✗'} 首个失败阶: {orders.first_failing_order}")
    return build_deformation_report(params, constraints, orders, cfg.settings())


def run_normalize_c4(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    _step(1, "读取参数并归一化 c4")
    params = load_params(cfg.params)
    after, change, verdicts = deformation.compare_normalization(params, tests, cfg.tol)
    print(f"   c4: {params.c4} → {after.c4}")
    print(f"   {'✓' if verdicts['consistent'] else '✗'} 换基前后判定一致")
    return build_normalize_report(params, after, change, verdicts, cfg.settings())


def run_coboundary_lemmas(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    _step(1, "上边缘引理")
    checks = [cohomology.check_lemma_coboundary(m, M, tests, cfg.tol) for m, M in cohomology.lemma_pairs()]

    _step(2, "d2 d1 = 0")
    checks += [cohomology.check_nilpotency(M, tests, cfg.tol) for M in cohomology.random_cochains1(cfg.seed)]

    _step(3, "d2 与 Jacobiator 的桥接恒等式")
    checks += [cohomology.check_bridge(m, tests, cfg.tol) for m in cohomology.random_two_forms(cfg.seed)]
    failed = [c for c in checks if not c.passed]
    print(f"   ✓ {len(checks) - len(failed)}/{len(checks)} 通过")
    return build_check_report("coboundary-lemmas", checks, cfg.settings())


def run_closed_forms(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    _step(1, "闭式 Jacobiator")
    # 平台见证的体部分不是紧支撑的，闭式推导不覆盖它
    triples = tuple(tests.triples) + tuple(t for name, t in tests.witnesses.items() if name != "plateau")
    checks = [closed_forms.check_closed_form(i, j, triples) for i, j in sorted(closed_forms.CLOSED_FORMS)]
    for c in checks:
        print(f"   {'✓' if c.passed else '✗'} {c.name}: {c.residual:.3e}")
    return build_check_report("closed-forms", checks, cfg.settings())


def run_c4_invariance(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    _step(1, "五组参数归一化 c4 并比较逐阶判定")
    checks = deformation.check_normalization_invariance(tests, cfg.tol)
    for c in checks:
        print(f"   {'✓' if c.passed else '✗'} {c.name}")
    return build_check_report("c4-invariance", checks, cfg.settings())


def run_deformation_suite(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    checks = [deformation.check_family(name, tests, cfg.tol) for name in deformation.FAMILIES]
    checks += [deformation.check_violation(r, tests, cfg.tol, cfg.nu) for r in deformation.RELATIONS]
    checks += [deformation.check_term_necessity(k, tests, cfg.tol, cfg.nu) for k in ("m2_9", "m2_10", "m2_11")]
    return build_check_report("deformation-families", checks, cfg.settings())


def run_selftest(cfg: RunConfig, tests: TestSet) -> Dict[str, Any]:
    sections: Dict[str, Dict[str, Any]] = {}
    suites: Sequence[tuple] = (
        ("verify-cocycles", run_verify_cocycles),
        ("jacobiator-table", run_jacobiator_table),
        ("coboundary-lemmas", run_coboundary_lemmas),
        ("closed-forms", run_closed_forms),
        ("c4-invariance", run_c4_invariance),
        ("deformation-families", run_deformation_suite),
    )
    for n, (name, fn) in enumerate(suites, start=1):
        _banner(f"自检 {n}/{len(suites)}: {name}")
        sections[name] = fn(cfg, tests)
    return build_selftest_report(sections, cfg.settings())


RUNNERS: Dict[str, Callable[[RunConfig, TestSet], Dict[str, Any]]] = {
    "verify-cocycles": run_verify_cocycles,
    "jacobiator-table": run_jacobiator_table,
    "verify-deformation": run_verify_deformation,
    "normalize-c4": run_normalize_c4,
    "coboundary-lemmas": run_coboundary_lemmas,
    "closed-forms": run_closed_forms,
    "c4-invariance": run_c4_invariance,
    "selftest": run_selftest,
}


# ---------------------------------------------------------------------------
# 入口
# ---------------------------------------------------------------------------


def _write_reports(cfg: RunConfig, report: Dict[str, Any]) -> List[Path]:
    out = Path(cfg.out)
    paths = [
        write_json(report, out / f"{cfg.command}.json"),
        write_text(render_markdown(report), out / f"{cfg.command}.md"),
    ]
    if cfg.bless:
        paths.append(save_golden(cfg.command, report))
    return paths


def _golden_differences(cfg: RunConfig, report: Dict[str, Any]) -> List[str]:
    if cfg.bless:
        return []
    golden = load_golden(cfg.command)
    if golden is None or golden.get("config") != report.get("config"):
        return []
    return compare_golden(report, golden)


def run(cfg: RunConfig) -> int:
    """执行一次子命令，返回退出码。"""

    try:
        cfg.validate()
        _apply_overrides(cfg)
        _banner(f"{cfg.command}  (K={cfg.order}, n={cfg.thetas}, seed={cfg.seed})")
        tests = build_test_set(cfg.seed, cfg.count)
        report = RUNNERS[cfg.command](cfg, tests)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"配置错误: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AntibracketError as exc:
        # 参数文件合法但不满足前提（奇偶、增广理想、归一化条件）
        print(f"参数不满足前提: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    _write_reports(cfg, report)
    differences = _golden_differences(cfg, report)
    for line in differences:
        logger.warning(f"与金标准不一致: {line}")

    _banner(f"{'✅ 全部通过' if report['passed'] else '❌ 存在失败'}: {cfg.command}")
    if not report["passed"]:
        print(f"首个失败项: {report.get('first_failure')}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_FAILED if differences else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="反括号形变与上同调的数值验证")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--order", type=int, default=config.TRUNCATION_ORDER, help="ℏ 截断阶数 K")
    parser.add_argument("--thetas", type=int, default=config.THETA_COUNT, help="θ 生成元个数 n")
    parser.add_argument("--tol", type=float, default=config.ZERO_TOL, help="判为 0 的阈值")
    parser.add_argument("--nu", type=float, default=config.NONZERO_TOL, help="判为非零的阈值")
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    parser.add_argument("--count", type=int, default=config.TRIPLE_COUNT, help="随机三元组个数")
    parser.add_argument("--params", type=Path, default=None, help="形变参数文件（JSON 或 TOML）")
    parser.add_argument("--out", type=Path, default=Path(config.REPORTS_DIR), help="报告输出目录")
    parser.add_argument("--bless", action="store_true", help="用本次结果更新金标准文件")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        order=args.order,
        thetas=args.thetas,
        tol=args.tol,
        nu=args.nu,
        seed=args.seed,
        count=args.count,
        params=args.params,
        out=args.out,
        bless=args.bless,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
