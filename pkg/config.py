from pathlib import Path


# 基本路径（夹具与报告都放在仓库内）
ROOT_DIR = Path(__file__).resolve().parent
DOCS_DIR = ROOT_DIR / "docs"
FIXTURES_DIR = ROOT_DIR / "fixtures"
GOLDEN_DIR = FIXTURES_DIR / "golden"
REPORTS_DIR = ROOT_DIR / "reports"

# 系数环的截断参数
# - TRUNCATION_ORDER: ℏ 的最高保留阶数 K，超过的乘积直接丢弃
# - THETA_COUNT: 奇生成元 θ₁..θₙ 的个数 n（3 对应 H² 的奇部分维数）
TRUNCATION_ORDER = 4
THETA_COUNT = 3

# 判定阈值
# ZERO_TOL 以下判为 0，NONZERO_TOL 以上判为非零，中间区域视为数值噪声不作断言
ZERO_TOL = 1e-8
NONZERO_TOL = 1e-6

# 数值积分（scipy.integrate.quad，自适应 Gauss–Kronrod）
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 200

# 残差取值网格: (左端点, 右端点, 点数)
# 点数越多越稳妥，但 Jacobiator 的嵌套积分会按点数线性变慢
EVAL_GRID = (-3.0, 3.0, 25)

# 随机测试元
DEFAULT_SEED = 20240611
TRIPLE_COUNT = 100
SUPPORT_RADIUS = 2.0
MAX_POLY_DEGREE = 6

# 并行度（joblib）。1 表示顺序执行，结果与并行时逐位一致
N_JOBS = 1
