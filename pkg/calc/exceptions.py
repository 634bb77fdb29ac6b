"""计算层统一的异常类型。

检查失败不抛异常，只在报告里给出判定；这里的异常只表示输入不合法或无法计算。
"""


class AntibracketError(ValueError):
    """所有可预期错误的基类。"""


class NonIntegrable(AntibracketError):
    """支撑无界且没有衰减保证，无法做数值积分。"""


class TruncationMismatch(AntibracketError):
    """两个环元素的截断参数 (K, n) 不一致。"""


class NotUnitForm(AntibracketError):
    """求逆的元素常数项不是 1。"""


class ResolventPrecondition(AntibracketError):
    """预解算子的参数在 ℏ=0 处不为零。"""


class NotInEPrime(AntibracketError):
    """分布不属于 E′（核的支撑无界）。"""


class ParityViolation(AntibracketError):
    """形变参数的奇偶性与要求不符。"""


class AugmentationViolation(AntibracketError):
    """形变参数在 ℏ=0 处不为零。"""


class NotNormalizable(AntibracketError):
    """c₄ 不是 ℏ²Σ c₄,k ε_klm θ_l θ_m 的形状，无法换基归一。"""


class ConfigError(AntibracketError):
    """运行配置或参数文件不合法。"""
