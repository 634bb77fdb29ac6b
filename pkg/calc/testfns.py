"""
testfns 模块 - 测试元素与见证三元组

随机元素：ξ·(多项式 × 鼓包) + 多项式体部分，系数取三位小数，便于序列化后逐位复现。
见证三元组是手工挑选的，覆盖全部 8 种奇偶组合、分离支撑以及 f₀ 在一点附近等于 1 或 y 的情形。
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

import config

from .grassmann import SuperFun
from .symfun import ZERO, SymExpr, bump, polynomial, smooth_step


Triple = Tuple[SuperFun, SuperFun, SuperFun]

ELEMENT_CLASSES = ("even", "odd", "mixed")


def _get_config(name: str, default: Any) -> Any:
    return getattr(config, name, default)


@dataclass
class TestSet:
    """随机三元组加上按名字索引的见证三元组。"""

    __test__ = False  # 不是 pytest 测试类

    seed: int
    triples: List[Triple]
    witnesses: Dict[str, Triple] = field(default_factory=dict)

    def pairs(self) -> List[Tuple[SuperFun, SuperFun]]:
        return [(f, g) for f, g, _ in self.triples]

    def witness_triples(self) -> List[Triple]:
        return list(self.witnesses.values())

    def all_triples(self) -> List[Triple]:
        return self.triples + self.witness_triples()

    def subset(self, count: int) -> "TestSet":
        return TestSet(self.seed, self.triples[:count], dict(self.witnesses))

    def with_witnesses(self, names: Sequence[str]) -> "TestSet":
        return TestSet(self.seed, self.triples, {n: self.witnesses[n] for n in names})

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    def __len__(self) -> int:
        return len(self.triples)


def _coeffs(rng: np.random.Generator, degree: int) -> List[float]:
    return [round(float(c), 3) for c in rng.uniform(-1.0, 1.0, size=degree + 1)]


def _random_xi_part(rng: np.random.Generator, degree: int, radius: float) -> SymExpr:
    center = round(float(rng.uniform(-radius / 2, radius / 2)), 3)
    width = round(float(rng.uniform(0.5, radius - abs(center))), 3)
    return polynomial(_coeffs(rng, degree)) * bump(center, width)


def _random_body(rng: np.random.Generator, degree: int, radius: float) -> SymExpr:
    body = polynomial(_coeffs(rng, degree))
    if rng.random() < 0.3:
        body = body * bump(round(float(rng.uniform(-1.0, 1.0)), 3), radius)
    return body


def random_de_element(
    seed: int,
    element_class: str = "mixed",
    degree: int = 3,
    radius: Optional[float] = None,
) -> SuperFun:
    """按种子生成 DE 中的元素。

    element_class: "odd" 只有 ξ 部分（ε=1），"even" 只有体部分，"mixed" 两者都有
    """

    if element_class not in ELEMENT_CLASSES:
        raise ValueError(f"未知元素类别: {element_class}")
    max_degree = int(_get_config("MAX_POLY_DEGREE", 6))
    if not 0 <= degree <= max_degree:
        raise ValueError(f"多项式次数必须在 0..{max_degree} 之间: {degree}")
    radius = float(_get_config("SUPPORT_RADIUS", 2.0)) if radius is None else float(radius)
    rng = np.random.default_rng(seed)
    xi = _random_xi_part(rng, degree, radius) if element_class != "even" else None
    body = _random_body(rng, degree, radius) if element_class != "odd" else None
    return SuperFun.pure(xi=ZERO if xi is None else xi, body=ZERO if body is None else body)


def random_triples(seed: int, count: int, degree: int = 3) -> List[Triple]:
    """按 8 种 (ε_f, ε_g, ε_h) 组合轮流生成齐次三元组。"""

    patterns = list(product(("odd", "even"), repeat=3))
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**31 - 1, size=(count, 3))
    triples = []
    for n in range(count):
        classes = patterns[n % len(patterns)]
        triples.append(
            tuple(random_de_element(int(s), c, degree) for s, c in zip(seeds[n], classes))
        )
    return triples


# ---------------------------------------------------------------------------
# 见证元素
# ---------------------------------------------------------------------------


def xi_witnesses() -> List[SuperFun]:
    return [
        SuperFun.pure(xi=polynomial([1.0, 0.3]) * bump(0.0, 1.5)),
        SuperFun.pure(xi=polynomial([-0.2, 1.0]) * bump(0.3, 1.2)),
        SuperFun.pure(xi=polynomial([0.5, 0.0, 1.0]) * bump(-0.2, 1.4)),
    ]


def body_witnesses() -> List[SuperFun]:
    return [
        SuperFun.pure(body=polynomial([1.0, 0.5, -0.2])),
        SuperFun.pure(body=polynomial([0.0, 1.0, 0.0, -0.3])),
        SuperFun.pure(body=polynomial([0.7, 0.0, 1.0]) * bump(0.1, 2.0)),
    ]


def plateau() -> SymExpr:
    """θ̃(x+3)·θ̃(3−x)：[−2, 2] 上恒为 1，支撑 [−4, 4]。"""

    step = smooth_step()
    return step.compose_affine(1, 3) * step.compose_affine(-1, 3)


def parity_witnesses() -> Dict[str, Triple]:
    """8 种奇偶组合各一组，名字里 o 表示 ξ 型（ϵ=0），e 表示体（ϵ=1）。"""

    xis, bodies = xi_witnesses(), body_witnesses()
    out: Dict[str, Triple] = {}
    for pattern in product("oe", repeat=3):
        out["pattern_" + "".join(pattern)] = tuple(
            xis[i] if tag == "o" else bodies[i] for i, tag in enumerate(pattern)
        )
    return out


def disjoint_witness() -> Triple:
    """f₀ 的支撑与 g₁、h₁ 的支撑以及原点都分开。"""

    return (
        SuperFun.pure(xi=polynomial([1.0, 0.5]) * bump(-1.5, 0.5)),
        SuperFun.pure(body=polynomial([1.0, 1.0]) * bump(0.5, 0.5)),
        SuperFun.pure(body=bump(3.5, 0.5)),
    )


def disjoint_xi_witness() -> Triple:
    return (
        SuperFun.pure(xi=bump(-1.5, 0.5)),
        SuperFun.pure(xi=polynomial([0.0, 1.0]) * bump(0.5, 0.5)),
        SuperFun.pure(xi=bump(3.5, 0.5)),
    )


def plateau_witness() -> Triple:
    """f₀ 在原点附近等于 1，g₀ 在原点附近等于 y。"""

    p = plateau()
    return (
        SuperFun.pure(xi=p),
        SuperFun.pure(xi=p.times_x()),
        SuperFun.pure(body=polynomial([0.0, 0.0, 1.0])),
    )


def witness_triples(include_plateau: bool = True) -> Dict[str, Triple]:
    out = parity_witnesses()
    out["disjoint"] = disjoint_witness()
    out["disjoint_xi"] = disjoint_xi_witness()
    if include_plateau:
        out["plateau"] = plateau_witness()
    return out


def build_test_set(
    seed: Optional[int] = None,
    count: Optional[int] = None,
    degree: int = 2,
    include_plateau: bool = True,
) -> TestSet:
    seed = int(_get_config("DEFAULT_SEED", 20240611)) if seed is None else seed
    count = int(_get_config("TRIPLE_COUNT", 100)) if count is None else count
    return TestSet(seed, random_triples(seed, count, degree), witness_triples(include_plateau))
