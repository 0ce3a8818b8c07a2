#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 4:20 PM
@File       : sweep.py
@Description: 参数扫描
              - 参数路径 "<负荷>.<参数>"，两段式负荷用 "<负荷>.upper.<参数>"
              - 扫描范围 "lo:hi:n" (含两端，线性等分)
              - 线程池并发计算每个参数值下的无源窗口，结果按输入顺序返回
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields, is_dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config.settings import SWEEP_THREADS, WINDOW_BISECT_TOL, WINDOW_GRID_POINTS
from core.exceptions import ConfigError
from core.loads import LoadModel, update_model
from core.passivity import VoltageWindow, passive_voltage_window
from utils.logger import logger


def parse_range(text: str) -> np.ndarray:
    """
    "lo:hi:n" -> n 个等分点 (n = 1 时只取 lo)

    Raises:
        ConfigError: 格式错误或 n < 1
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--range 格式应为 lo:hi:n, 实际为 {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--range 含非数值: {text!r}") from exc
    if n < 1:
        raise ConfigError(f"--range 的点数至少为 1, 实际为 {n}")
    if n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def _resolve(model: object, path: List[str]) -> object:
    current = model
    for part in path:
        if not is_dataclass(current) or part not in {f.name for f in fields(current)}:
            raise ConfigError(f"参数路径中 {part!r} 不存在")
        current = getattr(current, part)
    return current


def parse_param(spec: str, models: Dict[str, LoadModel]) -> Tuple[str, str]:
    """
    解析 --param，返回 (负荷名, 模型内参数路径)

    Raises:
        ConfigError: 负荷不存在、参数不存在或参数不是数值
    """
    load, _, field_path = spec.partition(".")
    if not field_path:
        raise ConfigError(f"--param 格式应为 <负荷>.<参数>, 实际为 {spec!r}")
    if load not in models:
        raise ConfigError(f"--param 中的负荷 {load!r} 不存在, 可选: {sorted(models)}")
    target = _resolve(models[load], field_path.split("."))
    if isinstance(target, bool) or not isinstance(target, (int, float)):
        raise ConfigError(f"--param {spec!r} 指向的不是数值参数")
    return load, field_path


def run_sweep(model: LoadModel, field_path: str, values: np.ndarray,
              v_min: float, v_max: float,
              grid: int = WINDOW_GRID_POINTS, tol: float = WINDOW_BISECT_TOL,
              workers: Optional[int] = None, progress: bool = True) -> List[Tuple[float, VoltageWindow]]:
    """
    对每个参数值计算无源窗口

    Args:
        model: 基准负荷模型
        field_path: 模型内参数路径 (如 "y_p"、"upper.n_q")
        values: 参数取值
        v_min, v_max, grid, tol: 窗口扫描设置
        workers: 线程数，缺省为 SWEEP_THREADS
        progress: 是否显示进度条 (stderr)

    Returns:
        [(参数值, VoltageWindow)]，顺序与 values 一致
    """
    workers = max(1, min(workers or SWEEP_THREADS, len(values) or 1))
    # 取值在主线程先校验
    variants = [(float(v), update_model(model, {field_path: float(v)})) for v in values]

    def task(item: Tuple[float, LoadModel]) -> Tuple[float, VoltageWindow]:
        value, variant = item
        return value, passive_voltage_window(variant, v_min, v_max, grid, tol)

    logger.info(f"🔍 [扫描] {field_path}: {len(variants)} 个取值, 线程 {workers}")
    results: List[Tuple[float, VoltageWindow]] = []
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="Sweep") as pool:
        pbar = tqdm(total=len(variants), desc="📊 扫描进度", unit="点", colour="green", disable=not progress)
        for result in pool.map(task, variants):
            results.append(result)
            pbar.update(1)
        pbar.close()

    empty = sum(window.is_empty for _, window in results)
    if empty:
        logger.warning(f"⚠️ [扫描] {empty} 个取值下无源窗口为空")
    return results
