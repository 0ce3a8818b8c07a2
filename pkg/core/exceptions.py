#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 9:31 AM
@File       : exceptions.py
@Description: 领域异常
"""
from typing import Optional


class PassivityError(Exception):
    """所有领域异常的基类"""


class LoadParameterError(PassivityError, ValueError):
    """负荷参数违反非负/正值约束"""


class VoltageDomainError(PassivityError, ValueError):
    """电压幅值不为正"""


class SingularityError(PassivityError, ArithmeticError):
    """电压幅值 ≤ V_EPS，电流公式中的 1/V² 无意义"""


class AssemblyError(PassivityError, ValueError):
    """网络拼装失败: 悬空端点、零电容、重名、维度不符"""


class DivergenceError(PassivityError, ArithmeticError):
    """状态出现非有限值或超过发散阈值"""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message)
        self.t = t


class StepFailure(PassivityError, RuntimeError):
    """隐式步的牛顿迭代未收敛"""

    def __init__(self, message: str, t: Optional[float] = None,
                 iterations: int = 0, residual: float = float("nan")):
        super().__init__(message)
        self.t = t
        self.iterations = iterations
        self.residual = residual


class ConfigError(PassivityError, ValueError):
    """配置文件解析/校验失败 (JSON 错误时带行列号)"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message)
        self.line = line
        self.column = column
