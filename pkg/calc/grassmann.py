"""
grassmann 模块 - 系数环与超函数代数

- DeformRing: ℏ 的截断幂级数 ⊗ 奇生成元 θ₁..θₙ 的外代数
- SuperFun:   DE ⊗ DeformRing 的元素，按 (环单项式, ξf₀ + f₁) 分量存储
- 两种奇偶性：Grassmann 奇偶 ε 与移位奇偶 ϵ = ε + 1（带颜色时加上系数的 ε₁）

约定：系数总写在左边，α·f 表示环单项式 α 乘以纯函数 f。
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

import config

from .exceptions import NotUnitForm, TruncationMismatch
from .symfun import ZERO, SymExpr


Monomial = Tuple[int, Tuple[int, ...]]

ONE_KEY: Monomial = (0, ())


def _get_config(name: str, default: Any) -> Any:
    return getattr(config, name, default)


def _default_order() -> int:
    return int(_get_config("TRUNCATION_ORDER", 4))


def _default_thetas() -> int:
    return int(_get_config("THETA_COUNT", 3))


def canonical_thetas(indices: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """把 θ 下标排成升序，返回 (符号, 升序下标)；有重复下标时符号为 0。"""

    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    inversions = sum(1 for a, b in combinations(range(len(idx)), 2) if idx[a] > idx[b])
    return (-1) ** inversions, tuple(sorted(idx))


def merge_thetas(left: Tuple[int, ...], right: Tuple[int, ...]) -> Tuple[int, Tuple[int, ...]]:
    """θ_left · θ_right 的规范化，返回 (符号, 合并后的下标)。"""

    if set(left) & set(right):
        return 0, ()
    inversions = sum(1 for i in left for j in right if i > j)
    return (-1) ** inversions, tuple(sorted(left + right))


# ---------------------------------------------------------------------------
# 奇偶性
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Parity:
    """齐次元素的奇偶性。

    function_eps: 纯函数部分的 Grassmann 奇偶（ξ 部分为 1，体部分为 0）
    coefficient_eps: 环系数的 ε₁（θ 次数模 2）
    """

    function_eps: int
    coefficient_eps: int = 0

    @property
    def eps(self) -> int:
        return (self.function_eps + self.coefficient_eps) % 2

    @property
    def epsilon(self) -> int:
        # ϵ = ε₁(θ) + ϵ₂(f)，而 ϵ₂ = ε₂ + 1
        return (self.coefficient_eps + self.function_eps + 1) % 2


class Mixed:
    """非齐次元素的标记。"""

    def __repr__(self) -> str:
        return "MIXED"


MIXED = Mixed()


# ---------------------------------------------------------------------------
# 系数环
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeformRing:
    """截断系数环 K[[ℏ]]/(ℏ^{K+1}) ⊗ Λ(θ₁..θₙ) 的元素。"""

    terms: Tuple[Tuple[Monomial, float], ...] = ()
    order: int = field(default_factory=_default_order)
    thetas: int = field(default_factory=_default_thetas)

    # -- 构造 ---------------------------------------------------------------

    @classmethod
    def from_dict(cls, coeffs: Mapping[Monomial, float], order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        order = _default_order() if order is None else order
        thetas = _default_thetas() if thetas is None else thetas
        acc: Dict[Monomial, float] = {}
        for (p, idx), value in coeffs.items():
            if p > order or value == 0:
                continue
            sign, canon = canonical_thetas(idx)
            if sign == 0:
                continue
            if canon and (canon[0] < 1 or canon[-1] > thetas):
                raise ValueError(f"θ 下标越界: {idx}（n={thetas}）")
            key = (int(p), canon)
            acc[key] = acc.get(key, 0.0) + sign * float(value)
        items = tuple(sorted((k, v) for k, v in acc.items() if v != 0.0))
        return cls(items, order, thetas)

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence[Any]], order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        """[(hbar_power, [θ 下标], 系数), ...]，下标可以是任意顺序。"""

        order = _default_order() if order is None else order
        thetas = _default_thetas() if thetas is None else thetas
        ring = cls.zero(order, thetas)
        for p, idx, value in triples:
            ring = ring + cls.from_dict({(int(p), tuple(int(i) for i in idx)): float(value)}, order, thetas)
        return ring

    @classmethod
    def zero(cls, order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        return cls.from_dict({}, order, thetas)

    @classmethod
    def scalar(cls, value: float, order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        return cls.from_dict({ONE_KEY: value}, order, thetas)

    @classmethod
    def one(cls, order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        return cls.scalar(1.0, order, thetas)

    @classmethod
    def monomial(cls, power: int, indices: Sequence[int] = (), value: float = 1.0, order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        return cls.from_dict({(power, tuple(indices)): value}, order, thetas)

    @classmethod
    def hbar(cls, power: int = 1, order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        return cls.monomial(power, (), 1.0, order, thetas)

    @classmethod
    def theta(cls, index: int, order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        return cls.monomial(0, (index,), 1.0, order, thetas)

    # -- 访问 ---------------------------------------------------------------

    @property
    def coeffs(self) -> Dict[Monomial, float]:
        return dict(self.terms)

    def coefficient(self, power: int, indices: Sequence[int] = ()) -> float:
        sign, canon = canonical_thetas(indices)
        return sign * self.coeffs.get((power, canon), 0.0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> float:
        return self.coeffs.get(ONE_KEY, 0.0)

    def at_hbar_zero(self) -> "DeformRing":
        return self.from_dict({k: v for k, v in self.terms if k[0] == 0}, self.order, self.thetas)

    def at_theta_zero(self) -> "DeformRing":
        return self.from_dict({k: v for k, v in self.terms if not k[1]}, self.order, self.thetas)

    def in_augmentation_ideal(self) -> bool:
        return all(p > 0 for (p, _), _ in self.terms)

    def respects_filtration(self) -> bool:
        """每个单项式的 θ 次数不超过 ℏ 次数，即属于 K[[ℏ, ℏθ]]。"""

        return all(len(idx) <= p for (p, idx), _ in self.terms)

    def parity(self) -> Optional[int]:
        """ε₁ 奇偶；非齐次时返回 None。"""

        found = {len(idx) % 2 for (_, idx), _ in self.terms}
        if not found:
            return 0
        return found.pop() if len(found) == 1 else None

    def min_hbar_order(self) -> Optional[int]:
        return min((p for (p, _), _ in self.terms), default=None)

    def by_order(self) -> Dict[int, "DeformRing"]:
        grouped: Dict[int, Dict[Monomial, float]] = {}
        for key, value in self.terms:
            grouped.setdefault(key[0], {})[key] = value
        return {p: self.from_dict(c, self.order, self.thetas) for p, c in sorted(grouped.items())}

    def max_abs(self) -> float:
        return max((abs(v) for _, v in self.terms), default=0.0)

    def chop(self, tol: float = 1e-12) -> "DeformRing":
        """丢弃绝对值低于 tol 的系数（换基后的舍入噪声）。"""

        return self.from_dict({k: v for k, v in self.terms if abs(v) >= tol}, self.order, self.thetas)

    def restrict(self, power: int) -> "DeformRing":
        return self.from_dict({k: v for k, v in self.terms if k[0] == power}, self.order, self.thetas)

    # -- 代数 ---------------------------------------------------------------

    def _check(self, other: "DeformRing") -> None:
        if (self.order, self.thetas) != (other.order, other.thetas):
            raise TruncationMismatch(
                f"截断参数不一致: (K={self.order}, n={self.thetas}) vs (K={other.order}, n={other.thetas})"
            )

    def __add__(self, other: "DeformRing") -> "DeformRing":
        if isinstance(other, (int, float)):
            other = self.scalar(other, self.order, self.thetas)
        self._check(other)
        acc = self.coeffs
        for key, value in other.terms:
            acc[key] = acc.get(key, 0.0) + value
        return self.from_dict(acc, self.order, self.thetas)

    __radd__ = __add__

    def __neg__(self) -> "DeformRing":
        return self.scale(-1.0)

    def __sub__(self, other: "DeformRing") -> "DeformRing":
        return self + (-other)

    def scale(self, factor: float) -> "DeformRing":
        return self.from_dict({k: factor * v for k, v in self.terms}, self.order, self.thetas)

    def __mul__(self, other: Union["DeformRing", float, int]) -> "DeformRing":
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        return ring_mul(self, other)

    def __rmul__(self, other: Union[float, int]) -> "DeformRing":
        return self.scale(float(other))

    def __pow__(self, power: int) -> "DeformRing":
        result = self.one(self.order, self.thetas)
        for _ in range(power):
            result = ring_mul(result, self)
        return result

    # -- 序列化 -------------------------------------------------------------

    def to_json(self) -> List[List[Any]]:
        return [[p, list(idx), value] for (p, idx), value in self.terms]

    @classmethod
    def from_json(cls, payload: Iterable[Sequence[Any]], order: Optional[int] = None, thetas: Optional[int] = None) -> "DeformRing":
        return cls.from_triples(payload, order, thetas)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (p, idx), value in self.terms:
            factors = []
            if p:
                factors.append("ℏ" if p == 1 else f"ℏ^{p}")
            factors.extend(f"θ{i}" for i in idx)
            parts.append(f"{value:g}" + ("·" + "".join(factors) if factors else ""))
        return " + ".join(parts)


def ring_mul(a: DeformRing, b: DeformRing) -> DeformRing:
    """分次乘积：θ 重排产生 (−1)^{逆序数}，ℏ 次数超过 K 的项丢弃。"""

    a._check(b)
    acc: Dict[Monomial, float] = {}
    for (pa, ia), va in a.terms:
        for (pb, ib), vb in b.terms:
            p = pa + pb
            if p > a.order:
                continue
            sign, idx = merge_thetas(ia, ib)
            if sign == 0:
                continue
            key = (p, idx)
            acc[key] = acc.get(key, 0.0) + sign * va * vb
    return DeformRing.from_dict(acc, a.order, a.thetas)


def ring_inverse_unit(a: DeformRing) -> DeformRing:
    """(1 + ε)⁻¹ = Σ_j (−ε)^j，要求 ε 在 ℏ=0 处为零。"""

    if abs(a.constant_term() - 1.0) > 0.0:
        raise NotUnitForm(f"常数项必须为 1，实际为 {a.constant_term():g}")
    eps = a - DeformRing.one(a.order, a.thetas)
    if not eps.in_augmentation_ideal():
        raise NotUnitForm(f"ε 在 ℏ=0 处不为零: {eps.at_hbar_zero()}")
    result = DeformRing.one(a.order, a.thetas)
    term = DeformRing.one(a.order, a.thetas)
    neg = -eps
    while True:
        term = ring_mul(term, neg)
        if term.is_zero:
            return result
        result = result + term


def substitute_generators(a: DeformRing, images: Sequence[DeformRing]) -> DeformRing:
    """θ_i ↦ images[i−1]，按乘积顺序展开。"""

    if len(images) != a.thetas:
        raise ValueError(f"需要 {a.thetas} 个生成元的像，实际 {len(images)}")
    result = DeformRing.zero(a.order, a.thetas)
    for (p, idx), value in a.terms:
        term = DeformRing.monomial(p, (), value, a.order, a.thetas)
        for i in idx:
            term = ring_mul(term, images[i - 1])
        result = result + term
    return result


# ---------------------------------------------------------------------------
# 超函数
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DEFun:
    """纯函数 ξ·f₀(x) + f₁(x)，f₀ 紧支撑。"""

    xi: SymExpr = ZERO
    body: SymExpr = ZERO

    @property
    def is_zero(self) -> bool:
        return self.xi.is_zero and self.body.is_zero

    def __add__(self, other: "DEFun") -> "DEFun":
        return DEFun(self.xi + other.xi, self.body + other.body)

    def __neg__(self) -> "DEFun":
        return DEFun(-self.xi, -self.body)

    def __sub__(self, other: "DEFun") -> "DEFun":
        return self + (-other)

    def scale(self, factor: float) -> "DEFun":
        return DEFun(self.xi.scale(factor), self.body.scale(factor))

    def homogeneous(self) -> List["DEFun"]:
        """按 ε 拆成齐次部分：ξ 部分（ε=1）与体部分（ε=0）。"""

        parts = []
        if not self.xi.is_zero:
            parts.append(DEFun(xi=self.xi))
        if not self.body.is_zero:
            parts.append(DEFun(body=self.body))
        return parts

    @property
    def eps(self) -> Optional[int]:
        if self.xi.is_zero:
            return 0
        if self.body.is_zero:
            return 1
        return None

    @property
    def epsilon(self) -> Optional[int]:
        return None if self.eps is None else (self.eps + 1) % 2

    def in_de(self) -> bool:
        return self.xi.is_compact


def _pure_product(f: DEFun, g: DEFun) -> DEFun:
    # ξ² = 0；f₁ 是偶元，与 ξ 交换
    return DEFun(xi=f.xi * g.body + f.body * g.xi, body=f.body * g.body)


@dataclass(frozen=True)
class SuperFun:
    """DE ⊗ DeformRing 的元素：{环单项式: 纯函数}，单项式系数吸收进函数。"""

    components: Tuple[Tuple[Monomial, DEFun], ...] = ()
    order: int = field(default_factory=_default_order)
    thetas: int = field(default_factory=_default_thetas)

    # -- 构造 ---------------------------------------------------------------

    @classmethod
    def from_dict(cls, comps: Mapping[Monomial, DEFun], order: Optional[int] = None, thetas: Optional[int] = None) -> "SuperFun":
        order = _default_order() if order is None else order
        thetas = _default_thetas() if thetas is None else thetas
        items = tuple(
            sorted(((k, v) for k, v in comps.items() if not v.is_zero and k[0] <= order), key=lambda kv: kv[0])
        )
        return cls(items, order, thetas)

    @classmethod
    def pure(cls, xi: SymExpr = ZERO, body: SymExpr = ZERO, order: Optional[int] = None, thetas: Optional[int] = None) -> "SuperFun":
        return cls.from_dict({ONE_KEY: DEFun(xi, body)}, order, thetas)

    @classmethod
    def zero(cls, order: Optional[int] = None, thetas: Optional[int] = None) -> "SuperFun":
        return cls.from_dict({}, order, thetas)

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[DeformRing, SymExpr, SymExpr]], order: Optional[int] = None, thetas: Optional[int] = None) -> "SuperFun":
        """由 (环系数, f₀, f₁) 列表构造；环系数按单项式展开。"""

        result = cls.zero(order, thetas)
        for ring, f0, f1 in terms:
            result = result + cls.pure(f0, f1, ring.order, ring.thetas).ring_scale(ring)
        return result

    # -- 访问 ---------------------------------------------------------------

    @property
    def comps(self) -> Dict[Monomial, DEFun]:
        return dict(self.components)

    @property
    def is_zero(self) -> bool:
        return not self.components

    def is_pure(self) -> bool:
        return all(key == ONE_KEY for key, _ in self.components)

    def pure_part(self) -> DEFun:
        return self.comps.get(ONE_KEY, DEFun())

    def in_de(self) -> bool:
        return all(f.in_de() for _, f in self.components)

    def split(self) -> List["SuperFun"]:
        """拆成 ϵ-齐次的单分量元素；求和等于原元素。"""

        parts = []
        for key, fun in self.components:
            for piece in fun.homogeneous():
                parts.append(SuperFun(((key, piece),), self.order, self.thetas))
        return parts

    def homogeneous_terms(self) -> Iterator[Tuple[Monomial, DEFun]]:
        for key, fun in self.components:
            for piece in fun.homogeneous():
                yield key, piece

    def by_order(self) -> Dict[int, "SuperFun"]:
        grouped: Dict[int, Dict[Monomial, DEFun]] = {}
        for key, fun in self.components:
            grouped.setdefault(key[0], {})[key] = fun
        return {p: SuperFun.from_dict(c, self.order, self.thetas) for p, c in sorted(grouped.items())}

    # -- 代数 ---------------------------------------------------------------

    def _target(self, other: "SuperFun") -> Tuple[int, int]:
        if (self.order, self.thetas) == (other.order, other.thetas):
            return self.order, self.thetas
        if other.is_pure():
            return self.order, self.thetas
        if self.is_pure():
            return other.order, other.thetas
        raise TruncationMismatch(
            f"截断参数不一致: (K={self.order}, n={self.thetas}) vs (K={other.order}, n={other.thetas})"
        )

    def __add__(self, other: "SuperFun") -> "SuperFun":
        order, thetas = self._target(other)
        acc = self.comps
        for key, fun in other.components:
            acc[key] = acc[key] + fun if key in acc else fun
        return SuperFun.from_dict(acc, order, thetas)

    def __neg__(self) -> "SuperFun":
        return SuperFun.from_dict({k: -v for k, v in self.components}, self.order, self.thetas)

    def __sub__(self, other: "SuperFun") -> "SuperFun":
        return self + (-other)

    def scale(self, factor: float) -> "SuperFun":
        if factor == 0:
            return SuperFun.zero(self.order, self.thetas)
        return SuperFun.from_dict({k: v.scale(factor) for k, v in self.components}, self.order, self.thetas)

    def ring_scale(self, ring: DeformRing) -> "SuperFun":
        """左乘环元素 α·F（系数在左，无需交换符号）。"""

        acc: Dict[Monomial, DEFun] = {}
        for (pa, ia), value in ring.terms:
            for (pb, ib), fun in self.components:
                p = pa + pb
                if p > ring.order:
                    continue
                sign, idx = merge_thetas(ia, ib)
                if sign == 0:
                    continue
                key = (p, idx)
                piece = fun.scale(sign * value)
                acc[key] = acc[key] + piece if key in acc else piece
        return SuperFun.from_dict(acc, ring.order, ring.thetas)

    # -- 数值 ---------------------------------------------------------------

    def evaluate(self, grid: Sequence[float]) -> Dict[Monomial, Tuple[np.ndarray, np.ndarray]]:
        return {key: (fun.xi.evaluate(grid), fun.body.evaluate(grid)) for key, fun in self.components}

    def max_abs(self, grid: Sequence[float]) -> float:
        best = 0.0
        for xi_vals, body_vals in self.evaluate(grid).values():
            best = max(best, float(np.max(np.abs(xi_vals))), float(np.max(np.abs(body_vals))))
        return best

    def to_json(self) -> List[Dict[str, Any]]:
        return [
            {"hbar": p, "thetas": list(idx), "xi": fun.xi.to_json(), "body": fun.body.to_json()}
            for (p, idx), fun in self.components
        ]

    @classmethod
    def from_json(cls, payload: Iterable[Dict[str, Any]], order: Optional[int] = None, thetas: Optional[int] = None) -> "SuperFun":
        comps = {
            (int(item["hbar"]), tuple(item["thetas"])): DEFun(SymExpr.from_json(item["xi"]), SymExpr.from_json(item["body"]))
            for item in payload
        }
        return cls.from_dict(comps, order, thetas)


def superfun_product(f: SuperFun, g: SuperFun) -> SuperFun:
    """分次结合乘积 (αf)(βg) = (−1)^{ε(f)|β|} (αβ)(fg)。"""

    order, thetas = f._target(g)
    acc: Dict[Monomial, DEFun] = {}
    for (pa, ia), fa in f.homogeneous_terms():
        for (pb, ib), gb in g.homogeneous_terms():
            p = pa + pb
            if p > order:
                continue
            sign, idx = merge_thetas(ia, ib)
            if sign == 0:
                continue
            if fa.eps == 1 and len(ib) % 2 == 1:
                sign = -sign
            piece = _pure_product(fa, gb).scale(sign)
            if piece.is_zero:
                continue
            key = (p, idx)
            acc[key] = acc[key] + piece if key in acc else piece
    return SuperFun.from_dict(acc, order, thetas)


def xi_integral(f: SuperFun, weight: str = "1") -> SuperFun:
    """Grassmann 积分 ∫dξ·weight·f，结果只有体部分。

    weight="1": 取 ξ 的系数，系数 α 越过 ∫dξ 时带 (−1)^{|α|}
    weight="xi": ∫dξ ξ f = f₁（两次交换的符号抵消）
    """

    if weight not in ("1", "xi"):
        raise ValueError(f"weight 只能是 '1' 或 'xi': {weight}")
    acc: Dict[Monomial, DEFun] = {}
    for key, fun in f.components:
        if weight == "xi":
            acc[key] = DEFun(body=fun.body)
        else:
            sign = -1.0 if len(key[1]) % 2 else 1.0
            acc[key] = DEFun(body=fun.xi.scale(sign))
    return SuperFun.from_dict(acc, f.order, f.thetas)


def parity_of(f: SuperFun) -> Union[Parity, Mixed]:
    """齐次元素的奇偶性；非齐次返回 MIXED。零元素按偶元处理。"""

    found = {Parity(fun.eps, len(key[1]) % 2) for key, fun in f.homogeneous_terms()}
    eps_values = {p.eps for p in found}
    if not found:
        return Parity(0, 0)
    if len(eps_values) > 1:
        return MIXED
    if len(found) == 1:
        return found.pop()
    # 总奇偶一致但来源不同，以总 ε 为准
    total = eps_values.pop()
    return Parity(total, 0)


def epsilon_of(f: SuperFun) -> int:
    """ϵ 奇偶；非齐次输入抛 ValueError。"""

    parity = parity_of(f)
    if isinstance(parity, Mixed):
        raise ValueError("元素不是 ϵ-齐次的")
    return parity.epsilon


def cochain_grassmann_parity(epsilon: int, arity: int) -> int:
    """p-上链的 Grassmann 奇偶 ε_M = ϵ_M + p + 1。"""

    return (epsilon + arity + 1) % 2
