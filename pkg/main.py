#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 4:50 PM
@File       : main.py
@Description: 负荷无源性认证命令行
              - certify : 给定电压下每个负荷的证书 (退出码 0 全部无源 / 1 存在非无源 / 2 配置错误)
              - limits  : 无源电压窗口 CSV
              - simulate: 网络时域仿真，输出轨迹 CSV 与分段汇总
              - sweep   : 单参数扫描下的窗口端点
"""
import argparse
import sys
import traceback
from typing import List, Optional

from config.settings import TABLE1_CONFIG
from core.exceptions import AssemblyError, ConfigError, LoadParameterError, PassivityError, VoltageDomainError
from core.loads import ExpParams, LoadModel, TwoTierParams
from core.passivity import (
    certify, incremental_monotonicity_test, passive_voltage_limits, passive_voltage_window,
)
from core.sim import run_scenario, segment_summary
from services.config_loader import ConfigDocument, load_config
from services.report import (
    certificates_frame, render_table, summary_frame, summary_path, sweep_frame,
    windows_frame, write_csv, write_trace_csv,
)
from services.sweep import parse_param, parse_range, run_sweep
from utils.logger import logger

EXIT_OK = 0
EXIT_NOT_PASSIVE = 1
EXIT_CONFIG = 2


def _nominal_voltage(model: LoadModel, doc: ConfigDocument) -> float:
    if isinstance(model, ExpParams):
        return model.v0
    if isinstance(model, TwoTierParams) and isinstance(model.upper, ExpParams):
        return model.upper.v0
    if doc.grid.sources:
        src = doc.grid.sources[0]
        return (src.v_d ** 2 + src.v_q ** 2) ** 0.5
    raise ConfigError("未指定 --voltage，且 ZIP 负荷没有额定电压、网络中也没有电压源")


def cmd_certify(doc: ConfigDocument, args) -> int:
    """每个负荷在 --voltage (缺省为额定电压) 下的证书"""
    rows = []
    for name, model in doc.load_models().items():
        v_amp = args.voltage if args.voltage is not None else _nominal_voltage(model, doc)
        cert = certify(model, v_amp)
        icon = "✅" if cert.is_passive else "⛔"
        logger.info(f"{icon} [证书] {name} @ {v_amp:.1f} V: {cert.verdict.value} "
                    f"(λ_min={cert.lambda_min:.6g} S, λ_max={cert.lambda_max:.6g} S)")
        rows.append((name, cert))

    df = certificates_frame(rows)
    print(render_table(df))
    if args.out:
        write_csv(df, args.out)
    return EXIT_OK if all(cert.is_passive for _, cert in rows) else EXIT_NOT_PASSIVE


def cmd_limits(doc: ConfigDocument, args) -> int:
    """无源电压窗口，每个负荷每个区间一行"""
    a = doc.to_analysis()
    seed = args.seed if args.seed is not None else a.seed
    rows = []
    for name, model in doc.load_models().items():
        window = passive_voltage_window(model, a.v_min, a.v_max, a.grid, a.tol)
        analytic = ", ".join(f"{v:.2f}" for v in passive_voltage_limits(model)) or "无"
        if window.is_empty:
            logger.warning(f"⚠️ [窗口] {name} 在 [{a.v_min:g}, {a.v_max:g}] V 内没有严格无源的电压")
        else:
            spans = ", ".join(f"({lo:.2f}, {hi:.2f})" for lo, hi in window.intervals)
            logger.info(f"📐 [窗口] {name}: {spans} V | 解析临界电压: {analytic}")
            for lo, hi in window.intervals:
                report = incremental_monotonicity_test(model, (lo, hi), a.monotonicity_samples, seed)
                logger.info(f"🔬 [单调性] {name} ({lo:.2f}, {hi:.2f}) V: {report.samples} 对, "
                            f"违反 {report.violations}, 最小内积 {report.min_inner_product:.3e}")
        rows.append((name, window))

    df = windows_frame(rows)
    if args.out:
        write_csv(df, args.out)
    else:
        df.to_csv(sys.stdout, index=False, na_rep="nan", lineterminator="\n")
    return EXIT_OK


def cmd_simulate(doc: ConfigDocument, args) -> int:
    """仿真并输出轨迹与分段汇总；发散属于结果，退出码仍为 0"""
    a = doc.to_analysis()
    scenario = doc.to_scenario()
    trace = run_scenario(scenario)
    out = args.out or "trace.csv"
    write_trace_csv(trace, out)

    summary = segment_summary(trace, scenario, a.settle_window, a.settle_tol,
                              v_range=(a.v_min, a.v_max), grid=a.grid, bisect_tol=a.tol)
    df = summary_frame(summary)
    write_csv(df, summary_path(out))
    print(render_table(df, title=f"仿真分段汇总 ({len(trace.times)} 行轨迹 -> {out})"))
    return EXIT_OK


def cmd_sweep(doc: ConfigDocument, args) -> int:
    """--param 指定的参数按 --range 取值，输出每个取值下的窗口端点"""
    if not args.param or not args.range:
        raise ConfigError("sweep 需要 --param 与 --range")
    a = doc.to_analysis()
    models = doc.load_models()
    load, field_path = parse_param(args.param, models)
    values = parse_range(args.range)
    results = run_sweep(models[load], field_path, values, a.v_min, a.v_max, a.grid, a.tol)
    df = sweep_frame(args.param, results)
    if args.out:
        write_csv(df, args.out)
    else:
        df.to_csv(sys.stdout, index=False, na_rep="nan", lineterminator="\n")
    return EXIT_OK


COMMANDS = {
    "certify": cmd_certify,
    "limits": cmd_limits,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="静态交流负荷严格无源性认证")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=str(TABLE1_CONFIG), help="JSON 配置文件 (缺省为内置 table1.json)")
    common.add_argument("--out", default=None, help="输出 CSV 路径")

    p = sub.add_parser("certify", parents=[common], help="给定电压下的无源性证书")
    p.add_argument("--voltage", type=float, default=None, help="评估电压幅值 (V)，缺省为额定电压")

    p = sub.add_parser("limits", parents=[common], help="无源电压窗口")
    p.add_argument("--seed", type=int, default=None, help="单调性抽样种子 (覆盖 analysis.seed)")

    sub.add_parser("simulate", parents=[common], help="时域仿真")

    p = sub.add_parser("sweep", parents=[common], help="参数扫描")
    p.add_argument("--param", default=None, help="参数路径 <负荷>.<参数>，两段式用 <负荷>.upper.<参数>")
    p.add_argument("--range", default=None, help="取值范围 lo:hi:n")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = load_config(args.config)
        return COMMANDS[args.command](doc, args)
    except (ConfigError, AssemblyError, LoadParameterError, VoltageDomainError) as e:
        logger.error(f"❌ [参数错误] {e}")
        return EXIT_CONFIG
    except PassivityError as e:
        logger.error(f"💥 [运行失败] {e}")
        logger.error(traceback.format_exc())
        return EXIT_NOT_PASSIVE


if __name__ == "__main__":
    sys.exit(main())
