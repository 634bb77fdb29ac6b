"""
成对 Jacobiator 的分量闭式。

约定 J_{i,j}(f,g,h) = Σ_cyc (−1)^{ϵ(f)ϵ(h)} X_{i,j}(f,g,h)，X 对三个纯函数的分量是三线性的。
所有 X 的值都只有体部分。
"""

from __future__ import annotations

import logging
from typing import Callable, Dict, Optional, Tuple

from .antibracket import Distribution, FormId, distribution_apply
from .cohomology import jacobiator
from .grassmann import DEFun, SuperFun, epsilon_of
from .symfun import SymExpr, constant, evaluation_grid, heaviside_convolve
from .testfns import Triple
from .utils import CheckReport, input_scale, max_or_zero


logger = logging.getLogger(__name__)

ClosedForm = Callable[[DEFun, DEFun, DEFun, Optional[Distribution]], SymExpr]


def _euler(f1: SymExpr) -> SymExpr:
    return f1 - f1.diff().times_x().scale(0.5)


def _bracket_body(f: DEFun, g: DEFun) -> SymExpr:
    return f.body.diff() * g.xi - f.xi * g.body.diff()


def _q0(f: DEFun, g: DEFun) -> SymExpr:
    return (f.xi * g.xi.diff() - f.xi.diff() * g.xi).scale(0.5)


def _q1(f: DEFun, g: DEFun) -> SymExpr:
    return _euler(f.body) * g.xi.diff() - f.xi.diff() * _euler(g.body)


def _b2(f0: SymExpr, g0: SymExpr) -> SymExpr:
    local = (f0.diff(2) * g0.diff() - f0.diff() * g0.diff(2)).times_x()
    return heaviside_convolve(g0 * f0.diff(3) - f0 * g0.diff(3)) - local


def _y(f: DEFun, g: DEFun) -> SymExpr:
    return f.xi.diff() * g.body.diff() - f.body.diff() * g.xi.diff()


def x13(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    return h.body.scale(-(g.xi * f.xi.diff(3)).integrate())


def x14(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    c = (g.xi * f.xi.diff(3)).integrate()
    return h.xi.diff().scale(c) + constant((h.xi * _q0(f, g).diff(3)).integrate())


def x23(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    if f.xi.is_zero or g.xi.is_zero:
        return constant(0)
    return -(h.body * _b2(f.xi, g.xi))


def x24(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    q0 = _q0(f, g)
    total = constant(0)
    if not q0.is_zero and not h.xi.is_zero:
        total = total + _b2(q0, h.xi)
    if not f.xi.is_zero and not g.xi.is_zero:
        total = total + _euler(_b2(f.xi, g.xi)) * h.xi.diff()
    return total


def x34(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    p = f.body * g.body
    return h.body * _q1(f, g) + _euler(p) * h.xi.diff()


def x35(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    p = f.body * g.body
    return h.body.scale(_y(f, g).integrate()) - constant((p.diff() * h.xi.diff()).integrate())


def x36(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    p = f.body * g.body
    return h.body * heaviside_convolve(_y(f, g)) - heaviside_convolve(p.diff() * h.xi.diff())


def x37(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    p = f.body * g.body
    c = distribution_apply(M, _bracket_body(f, g))
    return h.body.scale(c) + constant(distribution_apply(M, p.diff() * h.xi))


def x45(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    q = DEFun(_q0(f, g), _q1(f, g))
    return h.xi.diff().scale(_y(f, g).integrate()) + constant(_y(q, h).integrate())


def x46(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    y = _y(f, g)
    q = DEFun(_q0(f, g), _q1(f, g))
    b6 = heaviside_convolve(y)
    return (b6 - y.times_x().scale(0.5)) * h.xi.diff() + heaviside_convolve(_y(q, h))


def x47(f: DEFun, g: DEFun, h: DEFun, M: Optional[Distribution]) -> SymExpr:
    q = DEFun(_q0(f, g), _q1(f, g))
    c = distribution_apply(M, _bracket_body(f, g))
    return h.xi.diff().scale(c) + constant(distribution_apply(M, _bracket_body(q, h)))


CLOSED_FORMS: Dict[Tuple[int, int], ClosedForm] = {
    (1, 3): x13,
    (1, 4): x14,
    (2, 3): x23,
    (2, 4): x24,
    (3, 4): x34,
    (3, 5): x35,
    (3, 6): x36,
    (3, 7): x37,
    (4, 5): x45,
    (4, 6): x46,
    (4, 7): x47,
}


def closed_form_jacobiator(
    i: int,
    j: int,
    f: SuperFun,
    g: SuperFun,
    h: SuperFun,
    M: Optional[Distribution] = None,
) -> SuperFun:
    """纯函数三元组上的 Σ_cyc σ(f,h) X_{i,j}(f,g,h)。"""

    fn = CLOSED_FORMS[(i, j)]
    total = constant(0)
    for a, b, c in ((f, g, h), (g, h, f), (h, f, g)):
        sigma = -1.0 if epsilon_of(a) * epsilon_of(c) % 2 else 1.0
        total = total + fn(a.pure_part(), b.pure_part(), c.pure_part(), M).scale(sigma)
    return SuperFun.pure(body=total, order=f.order, thetas=f.thetas)


def check_closed_form(
    i: int,
    j: int,
    triples: Tuple[Triple, ...],
    M: Optional[Distribution] = None,
    tol: float = 1e-7,
) -> CheckReport:
    """按定义算出的 J_{i,j} 与闭式比较，误差相对 J 的幅值。"""

    M = Distribution.delta(0.0) if M is None else M
    mi = FormId(i, M if i == 7 else None)
    mj = FormId(j, M if j == 7 else None)
    grid = evaluation_grid()
    values = []
    for t in triples:
        direct = jacobiator(mi, mj, *t)
        closed = closed_form_jacobiator(i, j, *t, M=M)
        scale = max(1.0, direct.max_abs(grid), input_scale(t))
        values.append((direct - closed).max_abs(grid) / scale)
    value = max_or_zero(values)
    logger.info(f"闭式 J({i},{j}): 相对误差 {value:.3e}")
    return CheckReport(f"J({i},{j}) closed form", value, tol, value < tol)
