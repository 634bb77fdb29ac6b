"""
cohomology 模块 - 伴随表示下的微分、Jacobiator 与各类恒等式检查

上链分两类：
- Cochain1: 单变量线性映射（算子或 分布∘ξ 积分）
- Cochain2: 双线性形式的环系数线性组合
d_p 按全符号公式展开，J(m, n) 取循环和并带 (−1)^{ϵ(f)ϵ(h)} 前因子。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from .antibracket import (
    OPERATORS,
    Distribution,
    Form,
    FormId,
    ProductForm,
    antibracket,
    cocycle_eval,
    distribution_apply,
)
from .exceptions import NotInEPrime, ParityViolation
from .grassmann import DEFun, DeformRing, SuperFun, epsilon_of
from .symfun import constant
from .testfns import TestSet, Triple
from .utils import CheckReport, inner_product, max_or_zero, nonzero_tol, parallel_map, residual, sign_of, zero_tol


logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(message)s")


class Bilinear(Protocol):
    epsilon: int

    def __call__(self, f: SuperFun, g: SuperFun) -> SuperFun: ...


def _sgn(exponent: int) -> float:
    return -1.0 if exponent % 2 else 1.0


# ---------------------------------------------------------------------------
# 上链
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cochain1:
    """1-上链 M；对 p=1 有 ε_M = ϵ_M + 2，两种奇偶一致。"""

    name: str
    pure: Callable[[DEFun], DEFun]
    epsilon: int

    def __call__(self, f: SuperFun) -> SuperFun:
        comps = {}
        for key, fun in f.components:
            value = self.pure(fun)
            if self.epsilon and len(key[1]) % 2:
                value = -value
            comps[key] = value
        return SuperFun.from_dict(comps, f.order, f.thetas)

    @classmethod
    def zero(cls) -> "Cochain1":
        return cls("0", lambda a: DEFun(), 0)

    @classmethod
    def operator(cls, op: str, factor: float = 1.0) -> "Cochain1":
        if op not in OPERATORS:
            raise ValueError(f"未知算子: {op}")
        fn, odd = OPERATORS[op]
        return cls(op if factor == 1.0 else f"{factor:g}·{op}", lambda a: fn(a).scale(factor), odd)

    @classmethod
    def from_distribution(cls, M: Distribution, sign: float = -1.0) -> "Cochain1":
        """f ↦ sign·M(∫dξ ξf)；值是常数体部分。"""

        def pure(a: DEFun) -> DEFun:
            if a.body.is_zero:
                return DEFun()
            return DEFun(body=constant(sign * distribution_apply(M, a.body)))

        prefix = "−" if sign < 0 else ""
        return cls(f"{prefix}{M.label()}∘∫dξξ", pure, 0)

    def grassmann_parity(self) -> int:
        return self.epsilon


Coefficient = Union[float, DeformRing]


@dataclass(frozen=True)
class Cochain2:
    """Σ α_k·m_k；α_k 是实数或环元素（写在左边）。"""

    terms: Tuple[Tuple[Coefficient, Form], ...] = ()

    @classmethod
    def single(cls, form: Form, coefficient: Coefficient = 1.0) -> "Cochain2":
        return cls(((coefficient, form),))

    def __add__(self, other: "Cochain2") -> "Cochain2":
        return Cochain2(self.terms + other.terms)

    def scale(self, factor: float) -> "Cochain2":
        return Cochain2(tuple((c * factor, form) for c, form in self.terms))

    def without(self, key: str) -> "Cochain2":
        return Cochain2(tuple((c, form) for c, form in self.terms if form.key != key))

    @property
    def epsilon(self) -> int:
        found = set()
        for c, form in self.terms:
            coefficient_parity = 0 if isinstance(c, (int, float)) else c.parity()
            if coefficient_parity is None:
                raise ParityViolation(f"{form.key} 的系数奇偶不齐次: {c}")
            found.add((coefficient_parity + form.epsilon) % 2)
        if len(found) > 1:
            raise ParityViolation(f"2-形式的各项奇偶不一致: {self.label()}")
        return found.pop() if found else 0

    def __call__(self, f: SuperFun, g: SuperFun) -> SuperFun:
        order, thetas = f._target(g)
        total = SuperFun.zero(order, thetas)
        for c, form in self.terms:
            value = cocycle_eval(form, f, g)
            if isinstance(c, (int, float)):
                total = total + value.scale(float(c))
            else:
                total = total + value.ring_scale(c)
        return total

    def label(self) -> str:
        parts = []
        for c, form in self.terms:
            coefficient = f"{c:g}" if isinstance(c, (int, float)) else f"({c})"
            parts.append(f"{coefficient}·{form.label()}")
        return " + ".join(parts) or "0"


def as_cochain(m: Union[Form, Cochain2, Bilinear]) -> Bilinear:
    if isinstance(m, (FormId, ProductForm)) or hasattr(m, "pure"):
        return Cochain2.single(m)
    return m


M0 = Cochain2.single(FormId(0))


# ---------------------------------------------------------------------------
# 微分
# ---------------------------------------------------------------------------


def d_adjoint(M: Callable[[List[SuperFun]], SuperFun], eps_M: int, args: Sequence[SuperFun]) -> SuperFun:
    """d_p M(f₁..f_{p+1})，伴随表示中 f·v = [f, v]。"""

    eps = [epsilon_of(a) for a in args]
    first = args[0]
    total = SuperFun.zero(first.order, first.thetas)
    n = len(args)
    for j in range(1, n + 1):
        rest = list(args[: j - 1]) + list(args[j:])
        exponent = j + eps[j - 1] * sum(eps[: j - 1]) + eps[j - 1] * eps_M
        total = total - antibracket(args[j - 1], M(rest)).scale(_sgn(exponent))
    for j in range(2, n + 1):
        for i in range(1, j):
            bracket = antibracket(args[i - 1], args[j - 1])
            new_args = list(args[: i - 1]) + [bracket] + list(args[i : j - 1]) + list(args[j:])
            exponent = j + eps[j - 1] * sum(eps[i : j - 1])
            total = total - M(new_args).scale(_sgn(exponent))
    return total


def d1_adjoint(M: Cochain1, f: SuperFun, g: SuperFun) -> SuperFun:
    return d_adjoint(lambda xs: M(xs[0]), M.epsilon, [f, g])


def d2_adjoint(m: Union[Form, Cochain2, Bilinear], f: SuperFun, g: SuperFun, h: SuperFun) -> SuperFun:
    m = as_cochain(m)
    return d_adjoint(lambda xs: m(xs[0], xs[1]), m.epsilon, [f, g, h])


@dataclass(frozen=True)
class Coboundary:
    """d₁M 当作 2-形式使用，ϵ 与 M 相同。"""

    cochain: Cochain1

    @property
    def epsilon(self) -> int:
        return self.cochain.epsilon

    def __call__(self, f: SuperFun, g: SuperFun) -> SuperFun:
        return d1_adjoint(self.cochain, f, g)


@dataclass(frozen=True)
class LemmaForm:
    """U₂ = (−1)^{ϵ_m ϵ_M} M(m(f,g)) − m(M(f), g) + (−1)^{ϵ(f)ϵ(g)} m(M(g), f)。"""

    m: Bilinear
    cochain: Cochain1

    @property
    def epsilon(self) -> int:
        return (self.m.epsilon + self.cochain.epsilon) % 2

    def __call__(self, f: SuperFun, g: SuperFun) -> SuperFun:
        M = self.cochain
        first = M(self.m(f, g)).scale(_sgn(self.m.epsilon * M.epsilon))
        second = self.m(M(f), g)
        third = self.m(M(g), f).scale(_sgn(epsilon_of(f) * epsilon_of(g)))
        return first - second + third


# ---------------------------------------------------------------------------
# Jacobiator
# ---------------------------------------------------------------------------


def jacobiator(m: Any, n: Any, f: SuperFun, g: SuperFun, h: SuperFun) -> SuperFun:
    """J(m,n)(f,g,h) = Σ_cyc (−1)^{ϵ(f)ϵ(h)} [m(n(f,g),h) + (−1)^{ϵ_m ϵ_n} n(m(f,g),h)]。"""

    m, n = as_cochain(m), as_cochain(n)
    cross = _sgn(m.epsilon * n.epsilon)
    same = m == n
    total = SuperFun.zero(f.order, f.thetas)
    for a, b, c in ((f, g, h), (g, h, f), (h, f, g)):
        sigma = _sgn(epsilon_of(a) * epsilon_of(c))
        term = m(n(a, b), c)
        if same:
            term = term.scale(1.0 + cross)
        else:
            term = term + n(m(a, b), c).scale(cross)
        total = total + term.scale(sigma)
    return total


def single_jacobiator(m: Any, f: SuperFun, g: SuperFun, h: SuperFun) -> SuperFun:
    """J(m) = ½J(m,m)，ϵ(m)=1 时为 0。"""

    m = as_cochain(m)
    if m.epsilon:
        return SuperFun.zero(f.order, f.thetas)
    return jacobiator(m, m, f, g, h).scale(0.5)


def bridge_residual(m: Any, f: SuperFun, g: SuperFun, h: SuperFun) -> SuperFun:
    """d₂m + (−1)^{ϵ(f)ϵ(h)} J(m₀, m)，应恒为 0。"""

    sigma = _sgn(epsilon_of(f) * epsilon_of(h))
    return d2_adjoint(m, f, g, h) + jacobiator(M0, m, f, g, h).scale(sigma)


# ---------------------------------------------------------------------------
# 检查
# ---------------------------------------------------------------------------


def _max_residual(fn: Callable[[Triple], SuperFun], triples: Sequence[Triple]) -> float:
    values = parallel_map(lambda t: residual(fn(t), t), list(triples))
    return max_or_zero(values)


def verify_cocycle(
    m: Any,
    tests: TestSet,
    tol: Optional[float] = None,
    expect: str = "zero",
    nu: Optional[float] = None,
) -> CheckReport:
    """d₂m 在测试集上的最大残差。expect="nonzero" 用于反例：在见证三元组上超过 ν 判通过。"""

    if not tests.triples and not tests.witnesses:
        raise ValueError("测试集为空")
    name = m.label() if hasattr(m, "label") else str(m)
    if expect == "zero":
        tol = zero_tol() if tol is None else tol
        value = _max_residual(lambda t: d2_adjoint(m, *t), tests.all_triples())
        passed = value < tol
    else:
        tol = nonzero_tol() if nu is None else nu
        value = _max_residual(lambda t: d2_adjoint(m, *t), tests.witness_triples() or tests.triples)
        passed = value > tol
    logger.info(f"上闭链检查 {name}: 残差 {value:.3e}（{'通过' if passed else '失败'}）")
    return CheckReport(f"d2 {name}", value, tol, passed, expect)


def verify_exactness_m7(M: Distribution, tests: TestSet, tol: Optional[float] = None) -> CheckReport:
    """m₂|₇(M) 与 d₁(f ↦ −M(∫dξ ξf)) 比较。"""

    if not M.in_E_prime:
        raise NotInEPrime(f"分布 {M.label()} 的核支撑无界，m2_7 不是上边缘")
    tol = zero_tol() if tol is None else tol
    form = FormId(7, M)
    cochain = Cochain1.from_distribution(M, sign=-1.0)

    def diff(t: Triple) -> SuperFun:
        f, g, _ = t
        return cocycle_eval(form, f, g) - d1_adjoint(cochain, f, g)

    value = _max_residual(diff, tests.triples)
    passed = value < tol
    logger.info(f"恰当性检查 m2_7({M.label()}): 残差 {value:.3e}")
    return CheckReport(f"m2_7({M.label()}) = d1 M", value, tol, passed, details={"cochain_sign": -1})


def check_lemma_coboundary(m: Any, M: Cochain1, tests: TestSet, tol: Optional[float] = None) -> CheckReport:
    """J(m, d₁M) = J(m₀, U₂)，U₂ 由 m 与 M 组装。"""

    tol = zero_tol() if tol is None else tol
    m = as_cochain(m)
    coboundary = Coboundary(M)
    lemma = LemmaForm(m, M)

    def diff(t: Triple) -> SuperFun:
        return jacobiator(m, coboundary, *t) - jacobiator(M0, lemma, *t)

    value = _max_residual(diff, tests.triples)
    name = m.label() if hasattr(m, "label") else "m"
    logger.info(f"上边缘引理 ({name}, {M.name}): 残差 {value:.3e}")
    return CheckReport(f"J({name}, d1 {M.name}) = J(m2_0, U2)", value, tol, value < tol)


def check_nilpotency(M: Cochain1, tests: TestSet, tol: Optional[float] = None) -> CheckReport:
    tol = zero_tol() if tol is None else tol
    value = _max_residual(lambda t: d2_adjoint(Coboundary(M), *t), tests.triples)
    return CheckReport(f"d2 d1 {M.name}", value, tol, value < tol)


def check_undeformed_jacobi(tests: TestSet, tol: Optional[float] = None) -> CheckReport:
    """J(m₀)(f,g,h) = 0，即反括号本身的 Jacobi 恒等式。"""

    tol = zero_tol() if tol is None else tol
    value = _max_residual(lambda t: single_jacobiator(M0, *t), tests.all_triples())
    logger.info(f"反括号 Jacobi 恒等式: 残差 {value:.3e}")
    return CheckReport("J(m2_0) = 0", value, tol, value < tol)


def check_bridge(m: Any, tests: TestSet, tol: Optional[float] = None) -> CheckReport:
    tol = zero_tol() if tol is None else tol
    value = _max_residual(lambda t: bridge_residual(m, *t), tests.triples)
    name = m.label() if hasattr(m, "label") else "m"
    return CheckReport(f"d2 {name} + σJ(m2_0, {name})", value, tol, value < tol)


# ---------------------------------------------------------------------------
# Jacobiator 表
# ---------------------------------------------------------------------------


ZERO_CELL = "0"
STAR = "*"
UNCHECKED = "X"
CONSTANT_A = "a"
CONSTANT_MINUS_A = "−a"

# 第 1..7 行：(i, j) → 期望
_LOW_TABLE = [
    ["0", "0", "*", "*", "0", "0", "0"],
    ["0", "0", "*", "*", "0", 9, 10],
    ["*", "*", "0", "*", "*", "*", "*"],
    ["*", "*", "*", "X", "*", "*", "*"],
    ["0", "0", "*", "*", "0", "0", "0"],
    ["0", 9, "*", "*", "0", "0", 8],
    ["0", 10, "*", "*", "0", 8, "0"],
]

# 第 8..10 行，j = 1..10
_HIGH_TABLE = {
    8: ["0", CONSTANT_A, "X", "X", "0", "0", "0", "0", 11, "0"],
    9: ["0", "X", "X", "X", "0", "0", CONSTANT_MINUS_A, 11, "X", "X"],
    10: ["0", "X", "X", "X", "0", "0", "0", "0", "X", "X"],
}

# 第 11 行只断言这些列为零
_ROW11_ZERO = (1, 5, 6, 7, 8)


def expected_table() -> Dict[Tuple[int, int], Union[str, int]]:
    """整数值表示 J_{i,j} = J(m₀, m_k)。"""

    table: Dict[Tuple[int, int], Union[str, int]] = {}
    for i, row in enumerate(_LOW_TABLE, start=1):
        for j, cell in enumerate(row, start=1):
            table[(i, j)] = cell
    for i, row in _HIGH_TABLE.items():
        for j, cell in enumerate(row, start=1):
            table[(i, j)] = cell
    for j in range(1, 12):
        table[(11, j)] = ZERO_CELL if j in _ROW11_ZERO else UNCHECKED
    return table


# 校准顺序：(待定形式, 决定它的关系格子)
CALIBRATION_ORDER = ((8, (6, 7)), (9, (2, 6)), (10, (2, 7)), (11, (8, 9)))


@dataclass
class Calibration:
    signs: Dict[int, float] = field(default_factory=lambda: {8: 1.0, 9: 1.0, 10: 1.0, 11: 1.0})
    overlaps: Dict[int, float] = field(default_factory=dict)

    def form(self, index: int, M: Optional[Distribution] = None) -> FormId:
        base = FormId(index, M if index in (7, 8, 10, 11) else None)
        return base.with_sign(self.signs.get(index, 1.0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "signs": {f"m2_{k}": v for k, v in sorted(self.signs.items())},
            "overlaps": {f"m2_{k}": v for k, v in sorted(self.overlaps.items())},
        }


def calibrate_normalizations(tests: TestSet, M: Optional[Distribution] = None) -> Calibration:
    """用关系格子上的内积确定 m₂|₈..m₂|₁₁ 的整体符号，按 8, 9, 10, 11 的顺序依次确定。"""

    M = Distribution.delta(0.0) if M is None else M
    calibration = Calibration()
    triples = tests.witness_triples() or tests.triples
    for target, (i, j) in CALIBRATION_ORDER:
        left_i, left_j = calibration.form(i, M), calibration.form(j, M)
        reference = FormId(target, M if target in (8, 10, 11) else None)
        overlap = 0.0
        for t in triples:
            overlap += inner_product(jacobiator(left_i, left_j, *t), jacobiator(M0, reference, *t))
        calibration.signs[target] = sign_of(overlap)
        calibration.overlaps[target] = overlap
        logger.info(f"m2_{target} 归一化符号: {calibration.signs[target]:+.0f}（重叠 {overlap:.3e}）")
    return calibration


@dataclass
class CellResult:
    i: int
    j: int
    expected: str
    verdict: str
    residual: Optional[float]
    passed: Optional[bool]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "i": self.i,
            "j": self.j,
            "expected": self.expected,
            "verdict": self.verdict,
            "residual": self.residual,
            "passed": self.passed,
        }


@dataclass
class TableReport:
    cells: Dict[Tuple[int, int], CellResult]
    sum_identity: CheckReport
    calibration: Calibration
    distribution: str

    @property
    def passed(self) -> bool:
        return self.sum_identity.passed and all(c.passed is not False for c in self.cells.values())

    def failures(self) -> List[CellResult]:
        return [c for c in self.cells.values() if c.passed is False]


def _expected_label(cell: Union[str, int]) -> str:
    return f"J(m2_0, m2_{cell})" if isinstance(cell, int) else cell


def _evaluate_cell(
    i: int,
    j: int,
    expected: Union[str, int],
    forms: Dict[int, FormId],
    tests: TestSet,
    tol: float,
    nu: float,
) -> CellResult:
    mi, mj = forms[i], forms[j]
    if expected == ZERO_CELL:
        value = _max_residual(lambda t: jacobiator(mi, mj, *t), tests.triples)
        verdict = "ZERO" if value < tol else "NONZERO"
        return CellResult(i, j, "0", verdict, value, value < tol)
    if expected == STAR:
        value = _max_residual(lambda t: jacobiator(mi, mj, *t), tests.witness_triples())
        verdict = "NONZERO" if value > nu else "ZERO"
        return CellResult(i, j, "*", verdict, value, value > nu)
    if isinstance(expected, int):
        mk = forms[expected]
        value = _max_residual(lambda t: jacobiator(mi, mj, *t) - jacobiator(M0, mk, *t), tests.triples)
        verdict = f"RELATION(m2_{expected})" if value < tol else "MISMATCH"
        return CellResult(i, j, _expected_label(expected), verdict, value, value < tol)
    return CellResult(i, j, expected, "UNCHECKED", None, None)


def jacobiator_table(
    tests: TestSet,
    M: Optional[Distribution] = None,
    tol: Optional[float] = None,
    nu: Optional[float] = None,
    calibration: Optional[Calibration] = None,
) -> TableReport:
    """逐格判定 J_{i,j}；对称格子 (j,i) 只算一次，因为 J(n,m) = (−1)^{ϵ_m ϵ_n} J(m,n)。"""

    M = Distribution.delta(0.0) if M is None else M
    tol = zero_tol() if tol is None else tol
    nu = nonzero_tol() if nu is None else nu
    calibration = calibrate_normalizations(tests, M) if calibration is None else calibration
    forms = {k: calibration.form(k, M) for k in range(0, 12)}

    expected = expected_table()
    cells: Dict[Tuple[int, int], CellResult] = {}
    for (i, j), cell in expected.items():
        mirror = cells.get((j, i))
        if mirror is not None and expected.get((j, i)) == cell:
            cells[(i, j)] = CellResult(i, j, mirror.expected, mirror.verdict, mirror.residual, mirror.passed)
            continue
        result = _evaluate_cell(i, j, cell, forms, tests, tol, nu)
        cells[(i, j)] = result
        if result.passed is not None:
            logger.info(f"J({i},{j}) 期望 {result.expected}: {result.verdict}（残差 {result.residual:.3e}）")

    def identity(t: Triple) -> SuperFun:
        return (
            jacobiator(forms[8], forms[2], *t)
            + jacobiator(forms[9], forms[7], *t)
            + jacobiator(forms[10], forms[6], *t)
        )

    value = _max_residual(identity, tests.triples)
    sum_identity = CheckReport("J(8,2) + J(9,7) + J(10,6) = 0", value, tol, value < tol)
    logger.info(f"和恒等式: 残差 {value:.3e}")
    return TableReport(cells, sum_identity, calibration, M.label())


def ring_linearity_residual(form: FormId, f: SuperFun, g: SuperFun, alpha: DeformRing, beta: DeformRing) -> SuperFun:
    """m(αf, βg) − (−1)^{|α|ϵ_m + |β|(ϵ_m+ϵ(f))} αβ m(f,g)，α、β 为齐次环元素。"""

    pa, pb = alpha.parity(), beta.parity()
    if pa is None or pb is None:
        raise ParityViolation("系数必须是齐次的")
    eps_f = epsilon_of(f)
    sign = _sgn(pa * form.epsilon + pb * (form.epsilon + eps_f))
    left = cocycle_eval(form, f.ring_scale(alpha), g.ring_scale(beta))
    right = cocycle_eval(form, f, g).ring_scale(alpha * beta).scale(sign)
    return left - right


# ---------------------------------------------------------------------------
# 成套输入
# ---------------------------------------------------------------------------


def lemma_pairs() -> List[Tuple[Bilinear, Cochain1]]:
    """(上闭链, 1-上链) 对，覆盖四个一阶算子与 E′ 分布型上链。"""

    delta = Distribution.delta(0.0)
    return [
        (FormId(0), Cochain1.operator("Nxi")),
        (FormId(1), Cochain1.operator("Delta")),
        (FormId(2), Cochain1.operator("Euler")),
        (FormId(3), Cochain1.operator("Nxi")),
        (FormId(4), Cochain1.operator("Nz")),
        (FormId(5), Cochain1.operator("Delta")),
        (FormId(6), Cochain1.operator("Euler")),
        (FormId(7, delta), Cochain1.operator("Nz")),
        (FormId(3), Cochain1.from_distribution(delta)),
        (FormId(4), Cochain1.from_distribution(Distribution.delta(0.0, 1))),
    ]


def random_cochains1(seed: int, count: int = 10) -> List[Cochain1]:
    rng = np.random.default_rng(seed)
    names = sorted(OPERATORS)
    out = []
    for n in range(count):
        if n % 5 == 4:
            at = round(float(rng.uniform(-1.0, 1.0)), 3)
            out.append(Cochain1.from_distribution(Distribution.delta(at, int(rng.integers(0, 2))), sign=1.0))
        else:
            factor = round(float(rng.uniform(0.5, 2.0)), 3)
            out.append(Cochain1.operator(names[int(rng.integers(0, len(names)))], factor))
    return out


def random_two_forms(seed: int, count: int = 20) -> List[Cochain2]:
    """ϵ 齐次的随机 2-形式：偶、奇交替，每个是 2 到 3 个形式的实系数组合。"""

    delta = Distribution.delta(0.0)
    pools: Dict[int, List[Form]] = {
        0: [FormId(0), FormId(4), FormId(5), FormId(6), FormId(7, delta)],
        1: [FormId(1), FormId(2), FormId(3), FormId(9), ProductForm()],
    }
    rng = np.random.default_rng(seed)
    out = []
    for n in range(count):
        pool = pools[n % 2]
        picks = rng.choice(len(pool), size=int(rng.integers(2, 4)), replace=False)
        terms = tuple((round(float(rng.uniform(-1.0, 1.0)), 3), pool[int(k)]) for k in sorted(picks))
        out.append(Cochain2(terms))
    return out
