#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 9:12 AM
@File       : settings.py
@Description: 全局配置 (支持 .env 动态调整)
              - 数值常量: 决定结果的阈值，不随运行调整
              - 运行参数: 扫描网格、积分步长、日志目录等，可通过 .env 覆盖
"""
# config/settings.py
import math
import os
from pathlib import Path

import psutil
from dotenv import load_dotenv

# 获取项目根目录
BASE_DIR = Path(__file__).resolve().parent.parent
ENV_PATH = BASE_DIR / ".env"
load_dotenv(dotenv_path=ENV_PATH)

# 随包分发的 table1 场景
TABLE1_CONFIG = BASE_DIR / "config" / "table1.json"


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        print(f"⚠️ [配置警告] {name} 不是数值 ({raw})，重置为 {default}")
        return default


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
        if value < minimum:
            raise ValueError
        return value
    except ValueError:
        print(f"⚠️ [配置警告] {name} 格式错误 ({raw})，重置为 {default}")
        return default


# --- 数值常量 (结果相关，不开放给 .env) ---
# 电流公式除以 V²，幅值低于此值直接报奇异
V_EPS = 1e-6
# 严格无源与临界 (Marginal) 的分界 (S)
LAMBDA_TOL = 1e-9
# 任一电压/电流分量超过此值即判定发散 (SI)
DIVERGENCE_LIMIT = 1e9
# dq 坐标系同步角频率 (rad/s)
OMEGA0 = 2.0 * math.pi * 50.0
# 两段式负荷切换阈值 (相对 V0)
TWO_TIER_RATIO = 0.7
# 稳态求解 (rhs = 0) 的残差上限 (SI)
STEADY_STATE_TOL = 1e-9
STEADY_STATE_MAX_ITER = 60

# --- 无源窗口扫描 ---
WINDOW_GRID_POINTS = _env_int("WINDOW_GRID_POINTS", 2000, minimum=2)
WINDOW_BISECT_TOL = _env_float("WINDOW_BISECT_TOL", 0.5)

# --- 仿真 ---
SIM_DT = _env_float("SIM_DT", 1e-5)
SIM_RECORD_EVERY = _env_int("SIM_RECORD_EVERY", 100)
NEWTON_TOL = _env_float("NEWTON_TOL", 1e-8)
NEWTON_MAX = _env_int("NEWTON_MAX", 25)

# --- 稳态判定 ---
SETTLE_WINDOW = _env_float("SETTLE_WINDOW", 0.05)
SETTLE_TOL = _env_float("SETTLE_TOL", 0.5)

# --- 参数扫描并发 ---
# 默认取物理核数，psutil 在容器里可能返回 None
_default_threads = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
SWEEP_THREADS = _env_int("PASSIVITY_CERT_THREADS", _default_threads)

# --- 日志 ---
LOG_DIR = os.getenv("PASSIVITY_LOG_DIR", "log")
LOG_LEVEL = os.getenv("PASSIVITY_LOG_LEVEL", "INFO").upper()
