"""
calc 模块 - 计算层
包含符号函数、Grassmann 系数环、反括号与各个上闭链、上同调检查、形变族与报告组装
"""
