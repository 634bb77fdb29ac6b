import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import config  # noqa: E402
from calc.testfns import TestSet, build_test_set, witness_triples  # noqa: E402

# 测试用较粗的网格，命令行按 config 的完整规模运行
config.EVAL_GRID = (-3.0, 3.0, 13)

PARAMS_DIR = ROOT / "fixtures" / "params"


@pytest.fixture(scope="session")
def small_tests() -> TestSet:
    return build_test_set(seed=7, count=8, degree=2, include_plateau=False)


@pytest.fixture(scope="session")
def witness_set() -> TestSet:
    return TestSet(0, [], witness_triples(include_plateau=False))


@pytest.fixture
def params_dir() -> Path:
    return PARAMS_DIR
