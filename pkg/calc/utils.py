"""数值辅助函数：残差范数、内积、并行映射与报告里的取整。"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from joblib import Parallel, delayed

import config

from .grassmann import SuperFun
from .symfun import evaluation_grid


logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(message)s")

T = TypeVar("T")
R = TypeVar("R")


def _get_config(name: str, default: Any) -> Any:
    """读取配置模块中的字段，缺失时返回默认值。"""

    return getattr(config, name, default)


def zero_tol() -> float:
    return float(_get_config("ZERO_TOL", 1e-8))


def nonzero_tol() -> float:
    return float(_get_config("NONZERO_TOL", 1e-6))


@dataclass
class CheckReport:
    """单项检查的结果。expect="zero" 时残差低于 tol 判通过，"nonzero" 时高于 ν 判通过。"""

    name: str
    residual: float
    tol: float
    passed: bool
    expect: str = "zero"
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "residual": round_sig(self.residual),
            "tol": self.tol,
            "expect": self.expect,
            "passed": self.passed,
            "details": self.details,
        }


def input_scale(inputs: Iterable[SuperFun], grid: Optional[Sequence[float]] = None) -> float:
    """输入在网格上的最大幅值，至少取 1。"""

    grid = evaluation_grid() if grid is None else grid
    return max([1.0] + [f.max_abs(grid) for f in inputs])


def residual(value: SuperFun, inputs: Iterable[SuperFun] = (), grid: Optional[Sequence[float]] = None) -> float:
    """max |value| 除以输入幅值（所有单项式、ξ 与体部分一起取最大）。"""

    grid = evaluation_grid() if grid is None else grid
    if value.is_zero:
        return 0.0
    return value.max_abs(grid) / input_scale(inputs, grid)


def inner_product(a: SuperFun, b: SuperFun, grid: Optional[Sequence[float]] = None) -> float:
    """两个超函数在网格上的逐点内积，只在共同单项式上累加。"""

    grid = evaluation_grid() if grid is None else grid
    left, right = a.evaluate(grid), b.evaluate(grid)
    total = 0.0
    for key, (xi_a, body_a) in left.items():
        if key in right:
            xi_b, body_b = right[key]
            total += float(np.dot(xi_a, xi_b) + np.dot(body_a, body_b))
    return total


def max_or_zero(values: Iterable[float]) -> float:
    return max(values, default=0.0)


def parallel_map(fn: Callable[[T], R], items: Sequence[T], n_jobs: Optional[int] = None) -> List[R]:
    """按输入顺序返回结果；n_jobs=1 时顺序执行。"""

    n_jobs = int(_get_config("N_JOBS", 1)) if n_jobs is None else n_jobs
    if n_jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return list(Parallel(n_jobs=n_jobs)(delayed(fn)(item) for item in items))


def round_sig(value: float, digits: int = 4) -> float:
    """保留有效数字，报告里的数值统一用它，保证重复运行结果一致。"""

    if value == 0 or not math.isfinite(value):
        return float(value)
    return float(f"{value:.{digits}g}")


def sign_of(value: float) -> float:
    return -1.0 if value < 0 else 1.0
