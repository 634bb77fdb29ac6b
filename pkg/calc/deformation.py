"""
deformation 模块 - 形变族的组装、约束检查、θ 换基与逐阶 Jacobi 验证

C = m₀ + M_{c₄} + Σ_{i=1,2,3,5,6} c_i m_i + m₇(M) − c₆m₈(M) − c₂c₆m₉ − c₂m₁₀(M) − c₂c₆²m₁₁(M)
M_{c₄} = Σ_j c₄^{j+1}(−½)^j B_j，即 c₄/(1 + c₄N_z/2) 作用在 B₀ = m₂|₄ 上的展开。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from .antibracket import Distribution, EulerPower, FormId
from .cohomology import Calibration, Cochain2, calibrate_normalizations, single_jacobiator
from .exceptions import AugmentationViolation, ConfigError, NotNormalizable, ParityViolation
from .grassmann import DeformRing, _default_order, _default_thetas, substitute_generators
from .symfun import bump, evaluation_grid, polynomial
from .testfns import TestSet, witness_triples
from .utils import CheckReport, input_scale, nonzero_tol, parallel_map, round_sig, zero_tol


logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(message)s")


ODD_PARAMS = ("c1", "c2", "c3")
EVEN_PARAMS = ("c4", "c5", "c6")
PARAM_NAMES = ODD_PARAMS + EVEN_PARAMS


# ---------------------------------------------------------------------------
# 参数
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeformParams:
    """形变参数。M 是有限个 (环系数, 分布方向) 的和。"""

    c1: DeformRing
    c2: DeformRing
    c3: DeformRing
    c4: DeformRing
    c5: DeformRing
    c6: DeformRing
    M: Tuple[Tuple[DeformRing, Distribution], ...] = ()

    @classmethod
    def zero(cls, order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformParams":
        z = DeformRing.zero(order, thetas)
        return cls(z, z, z, z, z, z)

    @classmethod
    def build(cls, order: Optional[int] = None, thetas: Optional[int] = None, **values: Any) -> "DeformParams":
        """build(c4=[(1, [], 1.0)], M=[([(1, [], 1.0)], Distribution.delta())])。"""

        order = _default_order() if order is None else order
        thetas = _default_thetas() if thetas is None else thetas
        rings = {}
        for name in PARAM_NAMES:
            raw = values.pop(name, [])
            rings[name] = raw if isinstance(raw, DeformRing) else DeformRing.from_triples(raw, order, thetas)
        directions = []
        for coefficient, distribution in values.pop("M", []):
            ring = coefficient if isinstance(coefficient, DeformRing) else DeformRing.from_triples(coefficient, order, thetas)
            directions.append((ring, distribution))
        if values:
            raise ConfigError(f"未知形变参数: {', '.join(sorted(values))}")
        return cls(**rings, M=tuple(directions))

    @property
    def order(self) -> int:
        return self.c1.order

    @property
    def thetas(self) -> int:
        return self.c1.thetas

    def ring(self, name: str) -> DeformRing:
        return getattr(self, name)

    def m_total(self) -> DeformRing:
        """各方向系数之和，只用于约束里的环乘积（方向本身不影响是否为零）。"""

        total = DeformRing.zero(self.order, self.thetas)
        for ring, _ in self.M:
            total = total + ring
        return total

    def validate(self) -> None:
        for name in PARAM_NAMES:
            ring = self.ring(name)
            if (ring.order, ring.thetas) != (self.order, self.thetas):
                raise ConfigError(f"{name} 的截断参数与其他参数不一致")
            parity = ring.parity()
            expected = 1 if name in ODD_PARAMS else 0
            if not ring.is_zero and parity != expected:
                kind = "奇" if expected else "偶"
                raise ParityViolation(f"{name} 必须是{kind}元: {ring}")
            if not ring.in_augmentation_ideal():
                raise AugmentationViolation(f"{name} 在 ℏ=0 处不为零: {ring.at_hbar_zero()}")
        for ring, distribution in self.M:
            if not ring.is_zero and ring.parity() != 0:
                raise ParityViolation(f"M 的系数必须是偶元: {ring}")
            if not ring.in_augmentation_ideal():
                raise AugmentationViolation(f"M({distribution.label()}) 的系数在 ℏ=0 处不为零")

    def map_rings(self, fn) -> "DeformParams":
        rings = {name: fn(self.ring(name)) for name in PARAM_NAMES}
        return DeformParams(**rings, M=tuple((fn(r), d) for r, d in self.M))

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"order": self.order, "thetas": self.thetas}
        for name in PARAM_NAMES:
            out[name] = self.ring(name).to_json()
        out["M"] = [{"coefficient": r.to_json(), "distribution": d.to_json()} for r, d in self.M]
        return out

    def describe(self) -> Dict[str, str]:
        out = {name: str(self.ring(name)) for name in PARAM_NAMES}
        out["M"] = " + ".join(f"({r})·{d.label()}" for r, d in self.M) or "0"
        return out


def distribution_from_spec(spec: Dict[str, Any]) -> Distribution:
    """{"type": "delta", "at": 0, "order": 0, "weight": 1} 或 {"type": "kernel", "polynomial": [...]} / {"bump": [a, r]}。"""

    if "type" not in spec and ("deltas" in spec or "kernel" in spec):
        return Distribution.from_json(spec)
    kind = spec.get("type")
    if kind == "delta":
        return Distribution.delta(float(spec.get("at", 0.0)), int(spec.get("order", 0)), float(spec.get("weight", 1.0)))
    if kind == "kernel":
        if "polynomial" in spec:
            return Distribution.from_kernel(polynomial([float(c) for c in spec["polynomial"]]))
        if "bump" in spec:
            center, radius = spec["bump"]
            return Distribution.from_kernel(bump(float(center), float(radius)))
        raise ConfigError(f"核分布需要 polynomial 或 bump 字段: {spec}")
    raise ConfigError(f"未知分布类型: {kind!r}")


def params_from_dict(payload: Dict[str, Any]) -> DeformParams:
    """参数文档 → DeformParams；每个 c_i 是 [hbar_power, [θ 下标], 系数] 的列表。"""

    try:
        order = int(payload.get("order", _default_order()))
        thetas = int(payload.get("thetas", _default_thetas()))
        values: Dict[str, Any] = {name: payload.get(name, []) for name in PARAM_NAMES}
        values["M"] = [
            (item.get("coefficient", []), distribution_from_spec(item["distribution"]))
            for item in payload.get("M", [])
        ]
        unknown = set(payload) - set(PARAM_NAMES) - {"order", "thetas", "M", "name", "description"}
        if unknown:
            raise ConfigError(f"参数文档含未知字段: {', '.join(sorted(unknown))}")
        params = DeformParams.build(order, thetas, **values)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"参数文档格式错误: {exc}") from exc
    params.validate()
    return params


# ---------------------------------------------------------------------------
# 组装
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def default_calibration() -> Calibration:
    """在不含平台函数的见证三元组上校准 m₂|₈..m₂|₁₁ 的符号。"""

    tests = TestSet(0, [], witness_triples(include_plateau=False))
    return calibrate_normalizations(tests)


def _needs_calibration(p: DeformParams) -> bool:
    if not (p.c2 * p.c6).is_zero:
        return True
    return bool(p.M) and not (p.c2.is_zero and p.c6.is_zero)


@dataclass(frozen=True)
class Deformation:
    params: DeformParams
    form: Cochain2

    def bracket(self, f, g):
        """C(f, g)，结果是带系数的超函数。"""

        return self.form(f, g)

    def at_order(self, power: int) -> Cochain2:
        """C^{(p)}：只保留 ℏ^p 的系数。"""

        terms = []
        for c, form in self.form.terms:
            if isinstance(c, (int, float)):
                if power == 0:
                    terms.append((c, form))
                continue
            part = c.restrict(power)
            if not part.is_zero:
                terms.append((part, form))
        return Cochain2(tuple(terms))

    def without(self, key: str) -> "Deformation":
        return Deformation(self.params, self.form.without(key))

    def label(self) -> str:
        return self.form.label()


def resolvent_terms(c4: DeformRing) -> List[Tuple[DeformRing, EulerPower]]:
    """M_{c₄} 的展开项 (c₄^{j+1}(−½)^j, B_j)，到截断为止。"""

    terms = []
    power = c4
    j = 0
    while not power.is_zero:
        terms.append((power.scale((-0.5) ** j), EulerPower(j)))
        power = power * c4
        j += 1
    return terms


def build_deformation(p: DeformParams, calibration: Optional[Calibration] = None) -> Deformation:
    p.validate()
    if calibration is None:
        calibration = default_calibration() if _needs_calibration(p) else Calibration()

    terms: List[Tuple[Any, Any]] = [(1.0, FormId(0))]
    if not p.c4.is_zero:
        terms.extend(resolvent_terms(p.c4))
    for index in (1, 2, 3, 5, 6):
        ring = p.ring(f"c{index}")
        if not ring.is_zero:
            terms.append((ring, FormId(index)))
    c2c6 = p.c2 * p.c6
    if not c2c6.is_zero:
        terms.append((-c2c6, calibration.form(9)))
    for ring, M in p.M:
        if ring.is_zero:
            continue
        terms.append((ring, FormId(7, M)))
        for coefficient, index in ((p.c6 * ring, 8), (p.c2 * ring, 10), (c2c6 * p.c6 * ring, 11)):
            if not coefficient.is_zero:
                terms.append((-coefficient, calibration.form(index, M)))
    deformation = Deformation(p, Cochain2(tuple(terms)))
    logger.info(f"组装形变: {len(terms)} 项")
    return deformation


# ---------------------------------------------------------------------------
# 约束
# ---------------------------------------------------------------------------


def _relations(p: DeformParams) -> List[Tuple[str, DeformRing]]:
    m = p.m_total()
    out = [(f"c4·c{i}", p.c4 * p.ring(f"c{i}")) for i in (1, 2, 3, 5, 6)]
    out.append(("c4·M", p.c4 * m))
    out.extend((f"c3·c{i}", p.c3 * p.ring(f"c{i}")) for i in (1, 2, 5, 6))
    out.append(("c3·M", p.c3 * m))
    return out


def _shares_theta(ring: DeformRing, index: int) -> bool:
    return all(index in idx for (_, idx), _ in ring.terms)


def classify_family(p: DeformParams) -> str:
    rings = [p.ring(name) for name in PARAM_NAMES] + [r for r, _ in p.M]
    if all(r.is_zero for r in rings):
        return "undeformed"
    if any(not product.is_zero for _, product in _relations(p)):
        return "general"
    if not p.c4.at_theta_zero().is_zero:
        return "resolvent"
    if any(not r.at_theta_zero().is_zero for r in (p.c5, p.c6, p.m_total())):
        return "even_shift"
    if p.thetas == 3 and not p.c4.is_zero and all(idx == (1, 2) for (_, idx), _ in p.c4.terms):
        return "normalized_c4"
    if all(_shares_theta(r, 1) for r in rings if not r.is_zero):
        return "shared_theta"
    return "general"


@dataclass
class ConstraintReport:
    relations: List[Dict[str, Any]]
    family: str
    filtration_warnings: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["holds"] for r in self.relations)

    def violations(self) -> List[Dict[str, Any]]:
        return [r for r in self.relations if not r["holds"]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "family": self.family,
            "relations": self.relations,
            "filtration_warnings": self.filtration_warnings,
        }


def check_constraints(p: DeformParams) -> ConstraintReport:
    """逐个计算约束乘积；不成立的关系给出乘积与最低 ℏ 阶。"""

    relations = []
    for name, product in _relations(p):
        relations.append(
            {
                "relation": f"{name} = 0",
                "holds": product.is_zero,
                "product": str(product),
                "hbar_order": product.min_hbar_order(),
            }
        )
        if not product.is_zero:
            logger.warning(f"约束 {name} = 0 不成立: {product}")
    warnings = []
    for name in PARAM_NAMES:
        if not p.ring(name).respects_filtration():
            warnings.append(f"{name} 的 θ 次数超过 ℏ 次数")
    for ring, distribution in p.M:
        if not ring.respects_filtration():
            warnings.append(f"M({distribution.label()}) 的 θ 次数超过 ℏ 次数")
    for message in warnings:
        logger.warning(message)
    return ConstraintReport(relations, classify_family(p), warnings)


# ---------------------------------------------------------------------------
# θ 换基
# ---------------------------------------------------------------------------


HBAR = sp.Symbol("hbar")


@dataclass(frozen=True)
class BasisChange:
    """θ′_k = Σ_l forward[k, l](ℏ) θ_l；数组最后一维是 ℏ 的幂次系数。"""

    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def identity(cls, thetas: int, order: int) -> "BasisChange":
        eye = np.zeros((thetas, thetas, order + 1))
        eye[:, :, 0] = np.eye(thetas)
        return cls(eye, eye.copy())

    @classmethod
    def from_constant(cls, matrix: Sequence[Sequence[float]], order: int) -> "BasisChange":
        a = np.asarray(matrix, dtype=float)
        n = a.shape[0]
        forward = np.zeros((n, n, order + 1))
        inverse = np.zeros((n, n, order + 1))
        forward[:, :, 0] = a
        inverse[:, :, 0] = np.linalg.inv(a)
        return cls(forward, inverse)

    @property
    def order(self) -> int:
        return self.forward.shape[2] - 1

    def images(self) -> List[DeformRing]:
        """旧生成元 θ_l 用新生成元表示：θ_l = Σ_m inverse[l, m](ℏ) θ′_m。"""

        n = self.inverse.shape[0]
        out = []
        for l in range(n):
            coeffs = {
                (p, (m + 1,)): float(self.inverse[l, m, p])
                for m in range(n)
                for p in range(self.order + 1)
                if self.inverse[l, m, p] != 0
            }
            out.append(DeformRing.from_dict(coeffs, self.order, n))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "forward": np.round(self.forward, 12).tolist(),
            "inverse": np.round(self.inverse, 12).tolist(),
        }


def _series_coefficients(expr: sp.Expr, order: int) -> np.ndarray:
    series = sp.series(sp.together(expr), HBAR, 0, order + 1).removeO()
    poly = sp.Poly(sp.expand(series), HBAR)
    out = np.zeros(order + 1)
    for (power,), value in poly.terms():
        if power <= order:
            out[power] = float(value)
    return out


def _c4_vector(c4: DeformRing) -> List[sp.Expr]:
    """c₄ = Σ_k v_k ε_{klm} θ_l θ_m 的 v(ℏ)。"""

    pair_to_k = {(2, 3): 0, (1, 3): 1, (1, 2): 2}
    pair_sign = {(2, 3): 1, (1, 3): -1, (1, 2): 1}
    v = [sp.S.Zero, sp.S.Zero, sp.S.Zero]
    for (p, idx), value in c4.terms:
        if idx not in pair_to_k:
            raise NotNormalizable(f"c4 含不合形状的单项式 ℏ^{p}·θ{idx}")
        if p < 2:
            raise NotNormalizable(f"c4 的 ℏ 次数必须至少为 2，当前有 ℏ^{p}·θ{idx}")
        k = pair_to_k[idx]
        v[k] += sp.nsimplify(pair_sign[idx] * value / 2, rational=True) * HBAR**p
    return v


# (k, l, m) 取偶排列，θ_l θ_m 的系数正好是 2v_k
_CYCLIC = {0: (1, 2), 1: (2, 0), 2: (0, 1)}


def normalize_c4(p: DeformParams) -> Tuple[DeformParams, BasisChange]:
    """换 θ 基使 c₄ = ℏ^s c′ θ′₁θ′₂。

    c′ 取原来 θ_lθ_m 单项式的系数 2v_k，k 是 v 的首项中绝对值最大的分量。
    c₄ 已经只含 θ₁θ₂ 时返回恒等换基；只含一对 θ 时换基是置换矩阵。
    """

    if p.thetas != 3:
        raise NotNormalizable(f"只支持 n = 3，当前 n = {p.thetas}")
    if p.c4.is_zero:
        raise NotNormalizable("c4 为零，无需也无法归一")
    v = _c4_vector(p.c4)
    s = min(p_ for (p_, _), _ in p.c4.terms)
    w = [sp.expand(vk / HBAR**s) for vk in v]
    w0 = [abs(float(wk.subs(HBAR, 0))) for wk in w]
    # 并列时偏向 θ₁θ₂ 方向，已归一的 c₄ 因此得到恒等换基
    pick = max((2, 0, 1), key=lambda k: w0[k])
    first, second = _CYCLIC[pick]

    # θ = B θ′：B 的前两列是 e_l、e_m，第三列沿 v，且第 pick 个分量为 1
    B = sp.zeros(3, 3)
    B[first, 0] = 1
    B[second, 1] = 1
    for k in range(3):
        B[k, 2] = sp.cancel(w[k] / w[pick])
    A = B.inv()

    order = p.order
    forward = np.zeros((3, 3, order + 1))
    inverse = np.zeros((3, 3, order + 1))
    for a in range(3):
        for b in range(3):
            forward[a, b] = _series_coefficients(A[a, b], order)
            inverse[a, b] = _series_coefficients(B[a, b], order)
    change = BasisChange(forward, inverse)
    transformed = apply_basis_change(p, change)
    logger.info(f"c4 归一化: {p.c4} → {transformed.c4}")
    return transformed, change


def apply_basis_change(p: DeformParams, change: BasisChange) -> DeformParams:
    if change.inverse.shape[0] != p.thetas:
        raise ValueError(f"换基矩阵维数 {change.inverse.shape[0]} 与 n={p.thetas} 不符")
    images = change.images()
    return p.map_rings(lambda ring: substitute_generators(ring, images).chop())


def is_c4_preserving(change: BasisChange, atol: float = 1e-12) -> bool:
    """θ′_k 只含 θ₁、θ₂（k=1,2），θ′₃ = θ₃。"""

    f = change.forward
    if np.any(np.abs(f[:2, 2, :]) > atol):
        return False
    target = np.zeros_like(f[2])
    target[2, 0] = 1.0
    return bool(np.all(np.abs(f[2] - target) <= atol))


# ---------------------------------------------------------------------------
# 逐阶 Jacobi
# ---------------------------------------------------------------------------


@dataclass
class OrderReport:
    residuals: Dict[int, float]
    tol: float
    order: int
    triples: int

    @property
    def passed(self) -> bool:
        return all(v < self.tol for v in self.residuals.values())

    @property
    def first_failing_order(self) -> Optional[int]:
        failing = [p for p, v in sorted(self.residuals.items()) if v >= self.tol]
        return failing[0] if failing else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "tol": self.tol,
            "triples": self.triples,
            "residuals": {str(p): round_sig(v) for p, v in sorted(self.residuals.items())},
            "first_failing_order": self.first_failing_order,
            "passed": self.passed,
        }


def verify_jacobi_orderwise(
    C: Deformation,
    tests: TestSet,
    order: Optional[int] = None,
    tol: Optional[float] = None,
) -> OrderReport:
    """J(C)(f,g,h) 按 ℏ 幂次分组，每阶在所有三元组上取最大残差。"""

    order = C.params.order if order is None else order
    tol = zero_tol() if tol is None else tol
    grid = evaluation_grid()
    triples = tests.all_triples()

    def per_order(t) -> Dict[int, float]:
        value = single_jacobiator(C.form, *t)
        scale = input_scale(t, grid)
        return {p: part.max_abs(grid) / scale for p, part in value.by_order().items()}

    residuals = {p: 0.0 for p in range(order + 1)}
    for found in parallel_map(per_order, triples):
        for p, value in found.items():
            if p <= order:
                residuals[p] = max(residuals[p], value)
    report = OrderReport(residuals, tol, order, len(triples))
    for p, value in residuals.items():
        logger.info(f"ℏ^{p} 阶残差: {value:.3e}")
    return report


# ---------------------------------------------------------------------------
# 典型参数
# ---------------------------------------------------------------------------


def _eps_pairs(values: Sequence[float], power: int) -> List[Tuple[int, List[int], float]]:
    """ℏ^power Σ_k a_k ε_{klm} θ_l θ_m，展开成 2a_k θ_l θ_m。"""

    cyclic = [(2, 3), (3, 1), (1, 2)]
    return [(power, list(pair), 2.0 * a) for a, pair in zip(values, cyclic) if a != 0]


def family_params(name: str, order: int = 4) -> DeformParams:
    """各个形变族的代表参数，n = 3。"""

    delta = Distribution.delta(0.0)
    if name == "resolvent":
        return DeformParams.build(order, 3, c4=[(1, [], 1.0)])
    if name == "even_shift":
        return DeformParams.build(order, 3, c2=[(1, [1], 1.0)], c6=[(1, [], 1.0)], M=[([(1, [], 1.0)], delta)])
    if name == "shared_theta":
        return DeformParams.build(
            order,
            3,
            c1=[(1, [1], 0.4)],
            c2=[(1, [1], -0.7)],
            c3=[(1, [1], 0.3)],
            c4=[(2, [1, 3], 1.0)],
            c5=[(2, [1, 2], 0.5)],
            c6=[(2, [1, 3], -0.2)],
            M=[([(2, [1, 2], 0.6)], delta)],
        )
    if name == "normalized_c4":
        return DeformParams.build(
            order,
            3,
            c1=[(1, [1], 0.7)],
            c2=[(1, [2], -0.4)],
            c3=[(3, [1, 2, 3], 0.5)],
            c4=[(2, [1, 2], 1.0)],
            c5=_eps_pairs([0.3, 0.2, 0.0], 2),
            c6=_eps_pairs([-0.6, 0.0, 0.1], 2),
            M=[(_eps_pairs([0.0, 0.4, 0.0], 2), delta)],
        )
    raise ValueError(f"未知形变族: {name}")


FAMILIES = ("resolvent", "even_shift", "shared_theta", "normalized_c4")


def violation_params(relation: str, order: int = 4) -> DeformParams:
    """只违反一条约束的参数；违反出现在 ℏ² 阶。"""

    delta = Distribution.delta(0.0)
    left, right = relation.split("·")
    values: Dict[str, Any] = {}
    if left == "c4":
        values["c4"] = [(1, [], 1.0)]
        other = [(1, [1], 1.0)] if right in ODD_PARAMS else [(1, [], 1.0)]
    elif left == "c3":
        values["c3"] = [(1, [1], 1.0)]
        other = [(1, [2], 1.0)] if right in ODD_PARAMS else [(1, [], 1.0)]
    else:
        raise ValueError(f"未知约束: {relation}")
    if right == "M":
        values["M"] = [(other, delta)]
    else:
        values[right] = other
    return DeformParams.build(order, 3, **values)


RELATIONS = ("c4·c1", "c4·c2", "c4·c3", "c4·c5", "c4·c6", "c4·M", "c3·c1", "c3·c2", "c3·c5", "c3·c6", "c3·M")


# ---------------------------------------------------------------------------
# 成套检查
# ---------------------------------------------------------------------------


def check_family(name: str, tests: TestSet, tol: Optional[float] = None) -> CheckReport:
    """典型参数组装出的形变逐阶满足 Jacobi。"""

    params = family_params(name)
    report = verify_jacobi_orderwise(build_deformation(params), tests, tol=tol)
    worst = max(report.residuals.values(), default=0.0)
    return CheckReport(f"{name} Jacobi", worst, report.tol, report.passed, details=report.to_dict())


def check_violation(relation: str, tests: TestSet, tol: Optional[float] = None, nu: Optional[float] = None) -> CheckReport:
    """单条约束被破坏时，残差在 ℏ² 阶首次出现。"""

    tol = zero_tol() if tol is None else tol
    nu = nonzero_tol() if nu is None else nu
    params = violation_params(relation)
    report = verify_jacobi_orderwise(build_deformation(params), tests, tol=tol)
    at_two = report.residuals.get(2, 0.0)
    quiet_below = all(report.residuals[p] < tol for p in range(min(2, report.order + 1)))
    passed = at_two > nu and quiet_below
    logger.info(f"破坏 {relation}: ℏ² 阶残差 {at_two:.3e}")
    return CheckReport(f"{relation} ≠ 0 → Jacobi 在 ℏ² 失败", at_two, nu, passed, "nonzero", report.to_dict())


def check_term_necessity(key: str, tests: TestSet, tol: Optional[float] = None, nu: Optional[float] = None) -> CheckReport:
    """even_shift 去掉某个修正项后 Jacobi 必须失败。"""

    nu = nonzero_tol() if nu is None else nu
    C = build_deformation(family_params("even_shift")).without(key)
    report = verify_jacobi_orderwise(C, tests, tol=tol)
    worst = max(report.residuals.values(), default=0.0)
    return CheckReport(f"even_shift 去掉 {key}", worst, nu, worst > nu, "nonzero", report.to_dict())


def compare_normalization(p: DeformParams, tests: TestSet, tol: Optional[float] = None) -> Tuple[DeformParams, BasisChange, Dict[str, Any]]:
    """归一化 c₄ 并比较换基前后的逐阶判定。"""

    after, change = normalize_c4(p)
    before_report = verify_jacobi_orderwise(build_deformation(p), tests, tol=tol)
    after_report = verify_jacobi_orderwise(build_deformation(after), tests, tol=tol)
    verdicts = {
        "before": {"passed": before_report.passed, "first_failing_order": before_report.first_failing_order},
        "after": {"passed": after_report.passed, "first_failing_order": after_report.first_failing_order},
    }
    verdicts["consistent"] = verdicts["before"] == verdicts["after"]
    return after, change, verdicts


def normalization_sets(order: int = 4) -> Dict[str, DeformParams]:
    """换基不变性检查用的五组参数，最后一组故意违反 c4·c2 = 0。"""

    return {
        "already_normal": DeformParams.build(order, 3, c4=[(2, [1, 2], 1.0)]),
        "single_pair": DeformParams.build(order, 3, c4=[(2, [2, 3], 1.0)], c5=[(2, [1, 3], 0.5)]),
        "cyclic_sum": DeformParams.build(order, 3, c4=[(2, [2, 3], 1.0), (2, [3, 1], 1.0), (2, [1, 2], 1.0)]),
        "hbar_direction": DeformParams.build(order, 3, c4=[(2, [2, 3], 1.0), (2, [1, 2], 0.5), (3, [3, 1], 0.25)]),
        "violating": DeformParams.build(order, 3, c4=[(2, [1, 3], 1.0)], c2=[(1, [2], 0.5)]),
    }


def check_normalization_invariance(tests: TestSet, tol: Optional[float] = None) -> List[CheckReport]:
    """每组参数换基前后的 pass/fail 与首个失败阶必须相同；残差记不一致的字段数。"""

    checks = []
    for name, params in normalization_sets().items():
        _, _, verdicts = compare_normalization(params, tests, tol)
        mismatched = sum(verdicts["before"][k] != verdicts["after"][k] for k in ("passed", "first_failing_order"))
        checks.append(CheckReport(f"{name} 换基前后判定一致", float(mismatched), 0.5, verdicts["consistent"], details=verdicts))
    return checks
