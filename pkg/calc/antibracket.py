"""
antibracket 模块 - 反括号、一阶算子、分布与全部双线性形式

纯函数层的公式都以分量 (f₀, f₁) 写出，对实数双线性；
带系数的元素按 Koszul 规则展开：
    m(αf, βg) = (−1)^{|α|ϵ_m + |β|(ϵ_m + ϵ(f))} αβ·m(f, g)
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple, Union

import sympy as sp

from .exceptions import NonIntegrable, ResolventPrecondition
from .grassmann import DEFun, DeformRing, Monomial, SuperFun, merge_thetas
from .symfun import X, ZERO, SymExpr, constant, heaviside_convolve, smooth_step, step_down


# ---------------------------------------------------------------------------
# 分布
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    """有限个 δ 导数加一个核函数：Σ w·δ^{(k)}(·−a) + ρ(·)。"""

    deltas: Tuple[Tuple[float, int, float], ...] = ()
    kernel: Optional[SymExpr] = None

    @classmethod
    def delta(cls, at: float = 0.0, order: int = 0, weight: float = 1.0) -> "Distribution":
        if order < 0:
            raise ValueError(f"δ 的导数阶数必须非负: {order}")
        return cls(((float(at), int(order), float(weight)),))

    @classmethod
    def from_kernel(cls, rho: SymExpr) -> "Distribution":
        return cls((), None if rho.is_zero else rho)

    @property
    def in_E_prime(self) -> bool:
        return self.kernel is None or self.kernel.is_compact

    @property
    def is_zero(self) -> bool:
        return self.kernel is None and all(w == 0 for _, _, w in self.deltas)

    def __add__(self, other: "Distribution") -> "Distribution":
        if self.kernel is None:
            kernel = other.kernel
        elif other.kernel is None:
            kernel = self.kernel
        else:
            kernel = self.kernel + other.kernel
        return Distribution(self.deltas + other.deltas, kernel)

    def scale(self, factor: float) -> "Distribution":
        if factor == 0:
            return Distribution()
        kernel = None if self.kernel is None else self.kernel.scale(factor)
        return Distribution(tuple((a, k, factor * w) for a, k, w in self.deltas), kernel)

    def label(self) -> str:
        parts = []
        for a, k, w in self.deltas:
            name = "δ" + ("′" * k if k <= 3 else f"^({k})") + f"_{a:g}"
            parts.append(name if w == 1 else f"{w:g}·{name}")
        if self.kernel is not None:
            parts.append(f"kernel[{sp.sstr(self.kernel.expr)}]")
        return " + ".join(parts) or "0"

    def to_json(self) -> Dict[str, object]:
        return {
            "deltas": [[a, k, w] for a, k, w in self.deltas],
            "kernel": None if self.kernel is None else self.kernel.to_json(),
        }

    @classmethod
    def from_json(cls, payload: Dict[str, object]) -> "Distribution":
        kernel = payload.get("kernel")
        return cls(
            tuple((float(a), int(k), float(w)) for a, k, w in payload.get("deltas", [])),
            None if kernel is None else SymExpr.from_json(kernel),
        )


def distribution_apply(M: Distribution, phi: SymExpr) -> float:
    """M(φ) = Σ w·(−1)^k φ^{(k)}(a) + ∫ρφ。"""

    total = 0.0
    for a, k, w in M.deltas:
        total += w * (-1) ** k * phi.diff(k)(a)
    if M.kernel is not None and not phi.is_zero:
        total += (M.kernel * phi).integrate()
    return float(total)


def mu_tilde(M: Distribution) -> Distribution:
    """x ↦ M(θ(·−x) − θ̃)，δ 导数项会留下低一阶的 δ。"""

    step = smooth_step()
    out = Distribution()
    for a, k, w in M.deltas:
        if k == 0:
            rho = (step_down(a) - constant(step(a))).scale(w)
            out = out + Distribution.from_kernel(rho)
        else:
            out = out + Distribution.delta(a, k - 1, -w)
            out = out + Distribution.from_kernel(constant(-w * (-1) ** k * step.diff(k)(a)))
    if M.kernel is not None:
        out = out + Distribution.from_kernel(_kernel_mu_tilde(M.kernel))
    return out


def _kernel_mu_tilde(rho: SymExpr) -> SymExpr:
    step = smooth_step()
    if rho.is_compact:
        shift = rho.integrate() - (rho * step).integrate()
        return constant(shift) - heaviside_convolve(rho)
    if rho.expr.is_polynomial(X):
        # ∫ρ(θ(y−x) − θ̃(y)) = −∫₀ˣρ + ∫_{−1}^{1} ρ(θ − θ̃)
        antiderivative = sp.integrate(rho.expr, (X, 0, X))
        near = SymExpr(rho.expr, sp.Interval(0, 1)).integrate() - (SymExpr(rho.expr, sp.Interval(-1, 1)) * step).integrate()
        return SymExpr(-antiderivative + near, sp.S.Reals)
    raise NonIntegrable(f"核函数既非紧支撑也非多项式，μ̃ 发散: {rho.expr}")


# ---------------------------------------------------------------------------
# 纯函数层的算子
# ---------------------------------------------------------------------------


def _pure_bracket(a: DEFun, b: DEFun) -> DEFun:
    return DEFun(
        xi=a.xi.diff() * b.xi - a.xi * b.xi.diff(),
        body=a.body.diff() * b.xi - a.xi * b.body.diff(),
    )


def _pure_product(a: DEFun, b: DEFun) -> DEFun:
    return DEFun(xi=a.xi * b.body + a.body * b.xi, body=a.body * b.body)


def _pure_delta(a: DEFun) -> DEFun:
    return DEFun(body=a.xi.diff())


def _pure_nz(a: DEFun) -> DEFun:
    return DEFun(xi=a.xi.diff().times_x() + a.xi, body=a.body.diff().times_x())


def _pure_euler(a: DEFun) -> DEFun:
    return a - _pure_nz(a).scale(0.5)


def _pure_nxi(a: DEFun) -> DEFun:
    return DEFun(xi=a.xi)


def _half_euler_body(f1: SymExpr) -> SymExpr:
    """f₁ − x f₁′/2，即 E_z 在体部分上的作用。"""

    return f1 - f1.diff().times_x().scale(0.5)


# 算子名 → (纯函数层实现, Grassmann 奇偶)
OPERATORS: Dict[str, Tuple[Callable[[DEFun], DEFun], int]] = {
    "Delta": (_pure_delta, 1),
    "Euler": (_pure_euler, 0),
    "Nxi": (_pure_nxi, 0),
    "Nz": (_pure_nz, 0),
}


def _apply_pure_operator(op: Callable[[DEFun], DEFun], odd: int, f: SuperFun) -> SuperFun:
    comps: Dict[Monomial, DEFun] = {}
    for key, fun in f.components:
        value = op(fun)
        if odd and len(key[1]) % 2:
            value = -value
        comps[key] = value
    return SuperFun.from_dict(comps, f.order, f.thetas)


def apply_operator(op: str, f: SuperFun, c: Optional[DeformRing] = None) -> SuperFun:
    """一阶算子 Δ、E_z、N_ξ、N_z 以及预解式 Σ_j (−c/2)^j N_z^j。

    Δ 是奇算子，穿过奇系数时变号。
    """

    if op == "Resolvent":
        if c is None:
            raise ValueError("Resolvent 需要参数 c")
        if not c.in_augmentation_ideal():
            raise ResolventPrecondition(f"c 在 ℏ=0 处不为零: {c.at_hbar_zero()}")
        factor = c.scale(-0.5)
        power = DeformRing.one(c.order, c.thetas)
        term = f
        result = f
        while True:
            power = power * factor
            if power.is_zero:
                return result
            term = apply_operator("Nz", term)
            result = result + term.ring_scale(power)
    if op not in OPERATORS:
        raise ValueError(f"未知算子: {op}（可选 {', '.join(OPERATORS)}, Resolvent）")
    fn, odd = OPERATORS[op]
    return _apply_pure_operator(fn, odd, f)


# ---------------------------------------------------------------------------
# 双线性形式
# ---------------------------------------------------------------------------


# 各形式的 ϵ 奇偶
FORM_PARITY: Dict[int, int] = {0: 0, 1: 1, 2: 1, 3: 1, 4: 0, 5: 0, 6: 0, 7: 0, 8: 0, 9: 1, 10: 1, 11: 1}

# 以分布为参数的形式
DISTRIBUTION_FORMS = frozenset({7, 8, 10, 11})


def _kernel_m2(a: SymExpr, b: SymExpr) -> SymExpr:
    return b * a.diff(3) - a * b.diff(3)


def _m2_body(a0: SymExpr, b0: SymExpr) -> SymExpr:
    local = (a0.diff(2) * b0.diff() - a0.diff() * b0.diff(2)).times_x()
    return heaviside_convolve(_kernel_m2(a0, b0)) - local


def _mixed_kernel(a: DEFun, b: DEFun) -> SymExpr:
    return a.xi.diff() * b.body.diff() - a.body.diff() * b.xi.diff()


def _m10_argument(a0: SymExpr, b0: SymExpr) -> SymExpr:
    """m₂ 的体部分减去 θ̃·∫核，结果紧支撑，声明支撑取凸包。"""

    kernel = _kernel_m2(a0, b0)
    if kernel.is_zero:
        return ZERO
    value = _m2_body(a0, b0) - smooth_step().scale(kernel.integrate())
    lo, hi = kernel.bounds()
    return SymExpr(value.expr, sp.Interval(min(lo, -1.0), max(hi, 1.0)), value.smooth)


def _pure_m1(a: DEFun, b: DEFun, M: Optional[Distribution]) -> DEFun:
    return DEFun(body=constant((b.xi * a.xi.diff(3)).integrate()))


def _pure_m2(a: DEFun, b: DEFun, M: Optional[Distribution]) -> DEFun:
    if a.xi.is_zero or b.xi.is_zero:
        return DEFun()
    return DEFun(body=_m2_body(a.xi, b.xi))


def _pure_m3(a: DEFun, b: DEFun, M: Optional[Distribution]) -> DEFun:
    return DEFun(body=a.body * b.body)


def _pure_m4(a: DEFun, b: DEFun, M: Optional[Distribution]) -> DEFun:
    return DEFun(
        xi=(a.xi * b.xi.diff() - a.xi.diff() * b.xi).scale(0.5),
        body=_half_euler_body(a.body) * b.xi.diff() - a.xi.diff() * _half_euler_body(b.body),
    )


def _pure_m5(a: DEFun, b: DEFun, M: Optional[Distribution]) -> DEFun:
    return DEFun(body=constant(_mixed_kernel(a, b).integrate()))


def _pure_m6(a: DEFun, b: DEFun, M: Optional[Distribution]) -> DEFun:
    return DEFun(body=heaviside_convolve(_mixed_kernel(a, b)))


def _pure_m7(a: DEFun, b: DEFun, M: Distribution) -> DEFun:
    return DEFun(body=constant(distribution_apply(M, _pure_bracket(a, b).body)))


def _pure_m8(a: DEFun, b: DEFun, M: Distribution) -> DEFun:
    return DEFun(body=constant(distribution_apply(mu_tilde(M), _mixed_kernel(a, b))))


def _pure_m9(a: DEFun, b: DEFun, M: Optional[Distribution]) -> DEFun:
    return _pure_delta(_pure_bracket(a, b))


def _pure_m10(a: DEFun, b: DEFun, M: Distribution) -> DEFun:
    return DEFun(body=constant(distribution_apply(M, _m10_argument(a.xi, b.xi))))


def _pure_m11(a: DEFun, b: DEFun, M: Distribution) -> DEFun:
    return DEFun(body=constant(distribution_apply(mu_tilde(M), _kernel_m2(a.xi, b.xi))))


def _pure_m0(a: DEFun, b: DEFun, M: Optional[Distribution]) -> DEFun:
    return _pure_bracket(a, b)


_PURE_FORMS = {
    0: _pure_m0,
    1: _pure_m1,
    2: _pure_m2,
    3: _pure_m3,
    4: _pure_m4,
    5: _pure_m5,
    6: _pure_m6,
    7: _pure_m7,
    8: _pure_m8,
    9: _pure_m9,
    10: _pure_m10,
    11: _pure_m11,
}


@dataclass(frozen=True)
class FormId:
    """m₂|ᵢ 的标识；sign 是整体归一化（只有 8..11 会被校准成 −1）。"""

    index: int
    distribution: Optional[Distribution] = None
    sign: float = 1.0

    def __post_init__(self) -> None:
        if self.index not in _PURE_FORMS:
            raise ValueError(f"未知形式编号: {self.index}")
        if self.index in DISTRIBUTION_FORMS and self.distribution is None:
            raise ValueError(f"m2_{self.index} 需要分布参数 M")

    @property
    def key(self) -> str:
        return f"m2_{self.index}"

    @property
    def epsilon(self) -> int:
        return FORM_PARITY[self.index]

    def label(self) -> str:
        if self.distribution is None:
            return self.key
        return f"{self.key}({self.distribution.label()})"

    def with_sign(self, sign: float) -> "FormId":
        return replace(self, sign=float(sign))

    def with_distribution(self, M: Distribution) -> "FormId":
        return replace(self, distribution=M)

    def pure(self, a: DEFun, b: DEFun) -> DEFun:
        value = _PURE_FORMS[self.index](a, b, self.distribution)
        return value if self.sign == 1.0 else value.scale(self.sign)


@dataclass(frozen=True)
class EulerPower:
    """M_{c₄} 展开里的 B_j(f,g) = (−1)^{ε(f)}(N_z^jΔf)·E_z g + (E_z f)·(N_z^jΔg)，B₀ = m₂|₄。"""

    power: int

    @property
    def key(self) -> str:
        return f"b_{self.power}"

    @property
    def epsilon(self) -> int:
        return 0

    def label(self) -> str:
        return self.key

    def pure(self, a: DEFun, b: DEFun) -> DEFun:
        da, db = _pure_delta(a), _pure_delta(b)
        for _ in range(self.power):
            da, db = _pure_nz(da), _pure_nz(db)
        # Δa 只来自 ξ 部分（ε=1），符号恒为 −1
        return _pure_product(-da, _pure_euler(b)) + _pure_product(_pure_euler(a), db)


@dataclass(frozen=True)
class ProductForm:
    """结合乘积 f·g 当作 2-形式，用作上闭链检查的反例。"""

    @property
    def key(self) -> str:
        return "product"

    @property
    def epsilon(self) -> int:
        # 乘积保持 ε，因而相对 ϵ 是奇的
        return 1

    def label(self) -> str:
        return self.key

    def pure(self, a: DEFun, b: DEFun) -> DEFun:
        return _pure_product(a, b)


Form = Union[FormId, EulerPower, ProductForm]


def form_from_key(key: str, M: Optional[Distribution] = None) -> FormId:
    """"m2_7" 之类的稳定名字 → FormId。"""

    if not key.startswith("m2_"):
        raise ValueError(f"形式名必须形如 m2_<i>: {key}")
    index = int(key[3:])
    return FormId(index, M if index in DISTRIBUTION_FORMS else None)


def cocycle_eval(form: Form, f: SuperFun, g: SuperFun) -> SuperFun:
    """计算 form(f, g)，带系数时按 Koszul 规则展开。"""

    order, thetas = f._target(g)
    eps_m = form.epsilon
    acc: Dict[Monomial, DEFun] = {}
    for (pa, ia), fa in f.homogeneous_terms():
        eps_f = fa.epsilon
        for (pb, ib), gb in g.homogeneous_terms():
            p = pa + pb
            if p > order:
                continue
            sign, idx = merge_thetas(ia, ib)
            if sign == 0:
                continue
            exponent = len(ia) * eps_m + len(ib) * (eps_m + eps_f)
            if exponent % 2:
                sign = -sign
            value = form.pure(fa, gb)
            if value.is_zero:
                continue
            if sign < 0:
                value = -value
            key = (p, idx)
            acc[key] = acc[key] + value if key in acc else value
    return SuperFun.from_dict(acc, order, thetas)


def antibracket(f: SuperFun, g: SuperFun) -> SuperFun:
    """[f, g] = (∂_x f)(∂_ξ g) − (f ∂⃖_ξ)(∂_x g)。"""

    return cocycle_eval(FormId(0), f, g)


def canonical_distributions() -> List[Distribution]:
    """常用测试分布 δ₀、δ′₀ 与常数核 1（后者不在 E′ 中）。"""

    return [Distribution.delta(0.0), Distribution.delta(0.0, 1), Distribution.from_kernel(constant(1.0))]
