"""
symfun 模块 - 一元光滑实函数的符号层

表达式本身是 sympy 树，外面包一层支撑信息：
- 求导用 sympy 精确完成，任意阶都封闭
- 积分用 scipy.integrate.quad（自适应 Gauss–Kronrod），在分段点与支撑端点处切分
- θ(x−y) 卷积用惰性节点 ThetaIntegral 表示，求导时直接退化为被积函数
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from scipy import integrate as sp_integrate

import config

from .exceptions import NonIntegrable


logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(message)s")


X = sp.Symbol("x", real=True)

Number = Union[int, float]


def _get_config(name: str, default: Any) -> Any:
    """读取配置模块中的字段，缺失时返回默认值。"""

    return getattr(config, name, default)


class ThetaIntegral(sp.Function):
    """惰性节点 x ↦ ∫_lower^{arg(x)} φ(t) dt。

    参数顺序: (φ(t), t, lower, upper, arg)
    φ 的支撑在 [lower, upper] 内，所以 arg ≥ upper 时取全积分。
    """

    @classmethod
    def eval(cls, integrand, var, lower, upper, arg):
        if integrand == 0:
            return sp.S.Zero
        return None

    def fdiff(self, argindex=5):
        if argindex != 5:
            raise sp.ArgumentIndexError(self, argindex)
        integrand, var, _lower, _upper, arg = self.args
        return integrand.xreplace({var: arg})


# ---------------------------------------------------------------------------
# 数值编译
# ---------------------------------------------------------------------------


def _outer_integrals(expr: sp.Basic) -> List[ThetaIntegral]:
    """收集最外层的 ThetaIntegral 节点（嵌套在被积函数里的不算）。"""

    found = set()

    def walk(node: sp.Basic) -> None:
        if isinstance(node, ThetaIntegral):
            found.add(node)
            return
        for child in node.args:
            walk(child)

    walk(expr)
    return sorted(found, key=sp.default_sort_key)


def _breakpoints(expr: sp.Basic, var: sp.Symbol) -> List[float]:
    """分段条件的边界点，积分时作为 quad 的 points。"""

    points = set()
    for rel in expr.atoms(sp.core.relational.Relational):
        diff = rel.lhs - rel.rhs
        if var not in diff.free_symbols:
            continue
        try:
            poly = sp.Poly(diff, var)
        except sp.PolynomialError:
            continue
        if poly.degree() != 1:
            continue
        c1, c0 = poly.all_coeffs()
        if c1.is_number and c0.is_number:
            points.add(float(-c0 / c1))
    return sorted(points)


def _quad(fn: Callable[[float], float], lo: float, hi: float, points: Sequence[float]) -> float:
    inner = [p for p in points if lo < p < hi]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        value, abserr = sp_integrate.quad(
            fn,
            lo,
            hi,
            epsabs=_get_config("QUAD_EPSABS", 1e-12),
            epsrel=_get_config("QUAD_EPSREL", 1e-12),
            limit=_get_config("QUAD_LIMIT", 200),
            points=inner or None,
        )
    if caught:
        logger.debug(f"quad 在 [{lo:.3f}, {hi:.3f}] 上给出警告，估计误差 {abserr:.2e}")
    return float(value)


@lru_cache(maxsize=8192)
def _definite(expr: sp.Expr, var: sp.Symbol, lo: float, hi: float) -> float:
    """expr 在 [lo, hi] 上的定积分，带缓存，保证同一积分只算一次。"""

    fn = _compile(expr, var)
    return _quad(fn, lo, hi, _breakpoints(expr, var))


@lru_cache(maxsize=8192)
def _compile(expr: sp.Expr, var: sp.Symbol) -> Callable[[float], float]:
    """把表达式编译成标量函数；ThetaIntegral 节点替换成对 quad 的调用。"""

    nodes = _outer_integrals(expr)
    holders = [sp.Dummy(f"I{k}") for k in range(len(nodes))]
    body = expr.xreplace(dict(zip(nodes, holders)))
    lam = sp.lambdify([var, *holders], body, modules="math")
    node_fns = [_compile_node(node, var) for node in nodes]

    def evaluate(x0: float) -> float:
        return float(lam(x0, *[fn(x0) for fn in node_fns]))

    return evaluate


def _compile_node(node: ThetaIntegral, var: sp.Symbol) -> Callable[[float], float]:
    integrand, t, lower, upper, arg = node.args
    lo, hi = float(lower), float(upper)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise NonIntegrable(f"θ 卷积的被积函数支撑无界: [{lo}, {hi}]")
    inner = _compile(integrand, t)
    arg_fn = _compile(arg, var)
    points = _breakpoints(integrand, t)
    closed = integrand.xreplace({t: X})

    def evaluate(x0: float) -> float:
        y = arg_fn(x0)
        if y <= lo:
            return 0.0
        if y >= hi:
            return _definite(closed, X, lo, hi)
        return _quad(inner, lo, y, points)

    return evaluate


# ---------------------------------------------------------------------------
# 支撑区间
# ---------------------------------------------------------------------------


def _intervals(support: sp.Set) -> List[Tuple[float, float]]:
    if support.is_empty:
        return []
    parts = support.args if isinstance(support, sp.Union) else (support,)
    return [(float(p.inf), float(p.sup)) for p in parts]


def _interval(lo: Optional[Number], hi: Optional[Number]) -> sp.Set:
    return sp.Interval(
        -sp.oo if lo is None else sp.sympify(lo),
        sp.oo if hi is None else sp.sympify(hi),
    )


@dataclass(frozen=True)
class SymExpr:
    """一元实函数：sympy 表达式 + 声明的支撑。

    支撑外的取值恒为 0；支撑信息是保守的（可能偏大）。
    """

    expr: sp.Expr
    support: sp.Set = sp.S.Reals
    smooth: bool = True

    # -- 基本属性 ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.expr == 0 or self.support.is_empty

    @property
    def is_compact(self) -> bool:
        if self.is_zero:
            return True
        return bool(self.support.inf.is_finite and self.support.sup.is_finite)

    def bounds(self) -> Tuple[float, float]:
        if self.is_zero:
            return (0.0, 0.0)
        return (float(self.support.inf), float(self.support.sup))

    # -- 代数运算 ----------------------------------------------------------

    def _coerce(self, other: Any) -> "SymExpr":
        if isinstance(other, SymExpr):
            return other
        return constant(other)

    def __add__(self, other: Any) -> "SymExpr":
        other = self._coerce(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        return SymExpr(
            self.expr + other.expr,
            sp.Union(self.support, other.support),
            self.smooth and other.smooth,
        )

    __radd__ = __add__

    def __neg__(self) -> "SymExpr":
        if self.is_zero:
            return self
        return SymExpr(-self.expr, self.support, self.smooth)

    def __sub__(self, other: Any) -> "SymExpr":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "SymExpr":
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> "SymExpr":
        other = self._coerce(other)
        if self.is_zero or other.is_zero:
            return ZERO
        support = sp.Intersection(self.support, other.support)
        if support.is_empty:
            return ZERO
        return SymExpr(self.expr * other.expr, support, self.smooth and other.smooth)

    __rmul__ = __mul__

    def scale(self, factor: Number) -> "SymExpr":
        if factor == 0 or self.is_zero:
            return ZERO
        return SymExpr(sp.sympify(factor) * self.expr, self.support, self.smooth)

    def times_x(self) -> "SymExpr":
        """乘以坐标 x（支撑不变）。"""

        if self.is_zero:
            return self
        return SymExpr(X * self.expr, self.support, self.smooth)

    # -- 微积分 ------------------------------------------------------------

    def diff(self, k: int = 1) -> "SymExpr":
        if k < 0:
            raise ValueError(f"求导阶数必须非负: {k}")
        if k == 0 or self.is_zero:
            return self
        return SymExpr(sp.diff(self.expr, X, k), self.support, self.smooth)

    def compose_affine(self, scale: Number, shift: Number) -> "SymExpr":
        """x ↦ f(scale·x + shift)。"""

        if scale == 0:
            raise ValueError("仿射变换的伸缩系数不能为 0")
        if self.is_zero:
            return self
        s, c = sp.sympify(scale), sp.sympify(shift)
        pieces = []
        for lo, hi in _intervals(self.support):
            left, right = (lo, hi) if s > 0 else (hi, lo)
            a = -sp.oo if math.isinf(left) else (sp.sympify(left) - c) / s
            b = sp.oo if math.isinf(right) else (sp.sympify(right) - c) / s
            pieces.append(sp.Interval(a, b))
        return SymExpr(self.expr.xreplace({X: s * X + c}), sp.Union(*pieces), self.smooth)

    def evaluate(self, points: Union[Number, Iterable[Number]]) -> np.ndarray:
        """逐点求值；支撑外严格返回 0。"""

        grid = np.atleast_1d(np.asarray(points, dtype=float))
        if self.is_zero:
            return np.zeros_like(grid)
        fn = _compile(self.expr, X)
        spans = _intervals(self.support)
        out = np.zeros_like(grid)
        for i, x0 in enumerate(grid):
            if any(lo <= x0 <= hi for lo, hi in spans):
                out[i] = fn(float(x0))
        return out

    def __call__(self, x0: Number) -> float:
        return float(self.evaluate(x0)[0])

    def integrate(self) -> float:
        """∫f dx，按支撑的各个区间分别做自适应积分。"""

        if self.is_zero:
            return 0.0
        if not self.is_compact:
            raise NonIntegrable(f"支撑无界，无法积分: {self.support}")
        return float(sum(_definite(self.expr, X, lo, hi) for lo, hi in _intervals(self.support)))

    def breakpoints(self) -> List[float]:
        return _breakpoints(self.expr, X)

    # -- 序列化 ------------------------------------------------------------

    def to_json(self) -> Dict[str, Any]:
        return {
            "tree": _node_to_json(self.expr, {}),
            "support": [
                [None if math.isinf(lo) else lo, None if math.isinf(hi) else hi]
                for lo, hi in _intervals(self.support)
            ],
        }

    @classmethod
    def from_json(cls, payload: Dict[str, Any]) -> "SymExpr":
        expr = _node_from_json(payload["tree"], {})
        pieces = [_interval(lo, hi) for lo, hi in payload.get("support", [])]
        support = sp.Union(*pieces) if pieces else sp.S.EmptySet
        return cls(expr, support)


ZERO = SymExpr(sp.S.Zero, sp.S.EmptySet)


def _node_to_json(node: sp.Basic, bound: Dict[sp.Symbol, str]) -> Dict[str, Any]:
    if isinstance(node, ThetaIntegral):
        integrand, t, lower, upper, arg = node.args
        name = f"t{len(bound)}"
        return {
            "kind": "HeavisideConvolve",
            "var": name,
            "lower": float(lower),
            "upper": float(upper),
            "children": [
                _node_to_json(integrand, {**bound, t: name}),
                _node_to_json(arg, bound),
            ],
        }
    if node.is_Symbol:
        return {"kind": "Symbol", "name": bound.get(node, node.name)}
    if node.is_Atom and getattr(node, "is_number", False):
        return {"kind": "Number", "value": float(node)}
    if node in (sp.true, sp.false):
        return {"kind": "Boolean", "value": bool(node)}
    return {"kind": type(node).__name__, "children": [_node_to_json(a, bound) for a in node.args]}


def _node_from_json(payload: Dict[str, Any], bound: Dict[str, sp.Symbol]) -> sp.Basic:
    kind = payload["kind"]
    if kind == "Number":
        value = payload["value"]
        return sp.Integer(int(value)) if float(value).is_integer() else sp.Float(value)
    if kind == "Boolean":
        return sp.true if payload["value"] else sp.false
    if kind == "Symbol":
        name = payload["name"]
        return bound.get(name, X if name == "x" else sp.Symbol(name, real=True))
    if kind == "HeavisideConvolve":
        t = sp.Dummy("t", real=True)
        integrand = _node_from_json(payload["children"][0], {**bound, payload["var"]: t})
        arg = _node_from_json(payload["children"][1], bound)
        return ThetaIntegral(integrand, t, sp.sympify(payload["lower"]), sp.sympify(payload["upper"]), arg)
    children = [_node_from_json(c, bound) for c in payload.get("children", [])]
    if kind == "ExprCondPair":
        return tuple(children)
    return getattr(sp, kind)(*children)


# ---------------------------------------------------------------------------
# 构造函数
# ---------------------------------------------------------------------------


def constant(value: Number) -> SymExpr:
    if value == 0:
        return ZERO
    return SymExpr(sp.sympify(value), sp.S.Reals)


def variable() -> SymExpr:
    return SymExpr(X, sp.S.Reals)


def polynomial(coeffs: Sequence[Number]) -> SymExpr:
    """Σ coeffs[k]·x^k。"""

    expr = sum((sp.sympify(c) * X**k for k, c in enumerate(coeffs) if c != 0), sp.S.Zero)
    if expr == 0:
        return ZERO
    return SymExpr(expr, sp.S.Reals)


def bump(center: Number = 0, radius: Number = 1) -> SymExpr:
    """标准鼓包 b_{a,r}(x) = exp(−r²/(r²−(x−a)²))，支撑 [a−r, a+r]。"""

    if radius <= 0:
        raise ValueError(f"鼓包半径必须为正: {radius}")
    a, r = sp.sympify(center), sp.sympify(radius)
    inside = sp.And(X > a - r, X < a + r)
    expr = sp.Piecewise((sp.exp(-(r**2) / (r**2 - (X - a) ** 2)), inside), (0, True))
    return SymExpr(expr, sp.Interval(a - r, a + r))


def restrict(f: SymExpr, lo: Number, hi: Number) -> SymExpr:
    """把声明支撑截到 [lo, hi]。只用于积分，截断后的函数不再光滑。"""

    support = sp.Intersection(f.support, sp.Interval(sp.sympify(lo), sp.sympify(hi)))
    if support.is_empty or f.is_zero:
        return ZERO
    return SymExpr(f.expr, support, smooth=False)


def step_down(at: Number) -> SymExpr:
    """y ↦ θ(at − y)，在 at 处断开，只作分布核使用。"""

    expr = sp.Piecewise((1, X < sp.sympify(at)), (0, True))
    return SymExpr(expr, sp.Interval(-sp.oo, sp.sympify(at)), smooth=False)


def diff(f: SymExpr, k: int = 1) -> SymExpr:
    return f.diff(k)


def integrate(f: SymExpr) -> float:
    return f.integrate()


def heaviside_convolve(f: SymExpr) -> SymExpr:
    """x ↦ ∫θ(x−y) f(y) dy。x ≤ 支撑左端为 0，x ≥ 右端等于 integrate(f)。"""

    if f.is_zero:
        return ZERO
    if not f.is_compact:
        raise NonIntegrable(f"θ 卷积要求紧支撑: {f.support}")
    t = sp.Dummy("t", real=True)
    lower, upper = f.support.inf, f.support.sup
    node = ThetaIntegral(f.expr.xreplace({X: t}), t, lower, upper, X)
    return SymExpr(node, sp.Interval(lower, sp.oo), f.smooth)


@lru_cache(maxsize=1)
def smooth_step() -> SymExpr:
    """θ̃：归一化鼓包的原函数，x ≤ −1 为 0，x ≥ 1 为 1。"""

    b = bump(0, 1)
    total = b.integrate()
    return heaviside_convolve(b).scale(1.0 / total)


def evaluation_grid() -> np.ndarray:
    lo, hi, count = _get_config("EVAL_GRID", (-3.0, 3.0, 25))
    return np.linspace(lo, hi, int(count))
