#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 3:55 PM
@File       : report.py
@Description: 结果导出 (pandas)
              - 证书表 / 无源窗口表 / 扫描表 / 仿真分段汇总
              - CSV 列顺序固定；浮点数按最短往返表示写出
              - 终端输出为对齐的纯文本表
"""
import os
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd

from core.passivity import PassivityCertificate, VoltageWindow
from core.sim import SegmentSummary, Trace
from utils.logger import logger

CERTIFICATE_COLUMNS = ["load", "v_amp", "verdict", "lambda_min", "lambda_max", "residual_1", "residual_2", "branch"]
WINDOW_COLUMNS = ["load", "v_lo", "v_hi"]
SWEEP_COLUMNS = ["param", "value", "v_lo", "v_hi"]
SUMMARY_COLUMNS = [
    "load", "segment", "t_start", "t_end", "parameters", "v_operating", "verdict", "lambda_min",
    "window_lo", "window_hi", "limits", "status", "stability", "energy_decreasing",
]

PathLike = Union[str, Path]


def certificates_frame(rows: Iterable[Tuple[str, PassivityCertificate]]) -> pd.DataFrame:
    records = [
        {
            "load": name,
            "v_amp": cert.v_amp,
            "verdict": cert.verdict.value,
            "lambda_min": cert.lambda_min,
            "lambda_max": cert.lambda_max,
            "residual_1": cert.residual_1,
            "residual_2": cert.residual_2,
            "branch": cert.branch,
        }
        for name, cert in rows
    ]
    return pd.DataFrame(records, columns=CERTIFICATE_COLUMNS)


def windows_frame(rows: Iterable[Tuple[str, VoltageWindow]]) -> pd.DataFrame:
    """每个负荷的每个区间一行；空窗口不产生行"""
    records = [
        {"load": name, "v_lo": lo, "v_hi": hi}
        for name, window in rows
        for lo, hi in window.intervals
    ]
    return pd.DataFrame(records, columns=WINDOW_COLUMNS)


def sweep_frame(param: str, rows: Sequence[Tuple[float, VoltageWindow]]) -> pd.DataFrame:
    """参数值 -> 窗口区间；窗口为空时写一行 NaN 端点"""
    records = []
    for value, window in rows:
        if window.is_empty:
            records.append({"param": param, "value": value, "v_lo": float("nan"), "v_hi": float("nan")})
        for lo, hi in window.intervals:
            records.append({"param": param, "value": value, "v_lo": lo, "v_hi": hi})
    return pd.DataFrame(records, columns=SWEEP_COLUMNS)


def summary_frame(rows: List[SegmentSummary]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in rows], columns=SUMMARY_COLUMNS)


def write_csv(df: pd.DataFrame, path: PathLike) -> str:
    """写 UTF-8 CSV (不带索引，NaN 写作 nan)，返回绝对路径"""
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    df.to_csv(path, index=False, na_rep="nan", encoding="utf-8", lineterminator="\n")
    abs_path = os.path.abspath(path)
    logger.info(f"💾 [导出] {abs_path} ({len(df)} 行)")
    return abs_path


def write_trace_csv(trace: Trace, path: PathLike) -> str:
    return write_csv(trace.to_dataframe(), path)


def summary_path(trace_path: PathLike) -> Path:
    """trace.csv -> trace_summary.csv"""
    p = Path(trace_path)
    return p.with_name(f"{p.stem}_summary{p.suffix or '.csv'}")


def render_table(df: pd.DataFrame, title: Optional[str] = None) -> str:
    """对齐的纯文本表格"""
    body = "(empty)" if df.empty else df.to_string(index=False)
    return f"{title}\n{body}" if title else body
