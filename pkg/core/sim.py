#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 1:45 PM
@File       : sim.py
@Description: 时域仿真
              - 显式 RK4 / 隐式梯形法 (阻尼牛顿，缓存 LU)
              - 按事件分段积分，事件时刻原子地修改负荷参数
              - 理想电压源把网络分成互不影响的子网，各子网独立积分、独立判定发散
              - 稳态判定、误差哈密顿量单调性检查、分段汇总
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import groupby
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import lu_factor, lu_solve

from config.settings import (
    DIVERGENCE_LIMIT, NEWTON_MAX, NEWTON_TOL, SIM_DT, SIM_RECORD_EVERY,
    WINDOW_BISECT_TOL, WINDOW_GRID_POINTS,
)
from core.exceptions import AssemblyError, DivergenceError, SingularityError, StepFailure
from core.loads import LoadModel, describe_model, update_model
from core.network import AssembledSystem, Microgrid, assemble, solve_steady_state
from core.passivity import certify, passive_voltage_limits, passive_voltage_window
from utils.logger import logger

Rhs = Callable[[np.ndarray], np.ndarray]


class Integrator(str, Enum):
    TRAPEZOIDAL = "trapezoidal"
    RK4 = "rk4"


class SegmentStatus(str, Enum):
    COMPLETED = "completed"
    UNSTABLE = "unstable"
    STEP_FAILURE = "step_failure"
    NOT_REACHED = "not_reached"


@dataclass(frozen=True)
class ParameterChange:
    """t 时刻把负荷 target 的若干参数改为 changes 中的值"""
    t: float
    target: str
    changes: Mapping[str, float]


@dataclass
class Scenario:
    """
    仿真场景

    Attributes:
        grid: 网络
        t_end: 仿真终止时间 (s)
        events: 参数变更事件 (按时间排序，同一时刻的事件一起生效)
        integrator: 积分器
        dt: 步长 (s)
        record_every: 每隔多少步记录一行
        initial: 初始状态策略 "nominal" / "steady_state"
    """
    grid: Microgrid
    t_end: float
    events: List[ParameterChange] = field(default_factory=list)
    integrator: Integrator = Integrator.TRAPEZOIDAL
    dt: float = SIM_DT
    record_every: int = SIM_RECORD_EVERY
    initial: str = "nominal"
    newton_tol: float = NEWTON_TOL
    newton_max: int = NEWTON_MAX

    def __post_init__(self):
        if not math.isfinite(self.t_end) or self.t_end < 0:
            raise ValueError(f"t_end 必须是非负有限值, 实际为 {self.t_end}")
        if not self.dt > 0:
            raise ValueError(f"dt 必须为正, 实际为 {self.dt}")
        if int(self.record_every) < 1:
            raise ValueError(f"record_every 至少为 1, 实际为 {self.record_every}")
        if self.initial not in ("nominal", "steady_state"):
            raise ValueError(f"未知初始状态策略: {self.initial}")
        self.integrator = Integrator(self.integrator)
        self.record_every = int(self.record_every)
        self.events = sorted(self.events, key=lambda e: e.t)
        models = {node.name: node.model for node in self.grid.loads}
        for event in self.events:
            if not 0 <= event.t <= self.t_end:
                raise ValueError(f"事件时间 {event.t} 超出 [0, {self.t_end}]")
            if event.target not in models:
                raise AssemblyError(f"事件目标 {event.target} 不是负荷节点")
            # 参数名和取值在积分前就校验
            models[event.target] = update_model(models[event.target], event.changes)

    def restricted(self, grid: Microgrid) -> "Scenario":
        """只保留作用于 grid 中负荷的事件"""
        names = {node.name for node in grid.loads}
        return replace(self, grid=grid, events=[e for e in self.events if e.target in names])


@dataclass
class SegmentRecord:
    """
    一个子网在相邻两次参数变更之间的一段

    rows 为属于本段的轨迹行号 (事件时刻那一行归前一段)，
    energies 为这些行相对本段稳态的误差哈密顿量。
    """
    index: int
    loads: Tuple[str, ...]
    t_start: float
    t_end: float
    models: Dict[str, LoadModel]
    status: SegmentStatus = SegmentStatus.COMPLETED
    t_stop: Optional[float] = None
    message: str = ""
    rows: List[int] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    h_start: float = float("nan")
    reference: Optional[np.ndarray] = field(default=None, repr=False)
    operating_amplitudes: Dict[str, float] = field(default_factory=dict)


@dataclass
class Trace:
    """
    仿真轨迹: 每行一个记录时刻

    values 为协能量变量 (线路电流 A、节点电压 V)，列顺序与状态排序一致；
    子网中途停止后对应列为 NaN。
    """
    state_columns: List[str]
    load_names: List[str]
    times: np.ndarray
    values: np.ndarray
    amplitudes: np.ndarray
    h_err: np.ndarray
    segments: List[SegmentRecord]

    @property
    def columns(self) -> List[str]:
        return ["t"] + self.state_columns + [f"Vamp.{name}" for name in self.load_names] + ["H_err"]

    def to_dataframe(self) -> pd.DataFrame:
        data = np.column_stack([self.times, self.values, self.amplitudes, self.h_err]) \
            if len(self.times) else np.empty((0, len(self.columns)))
        return pd.DataFrame(data, columns=self.columns)

    def amplitude(self, load: str) -> np.ndarray:
        return self.amplitudes[:, self.load_names.index(load)]

    def segments_for(self, load: str) -> List[SegmentRecord]:
        return [seg for seg in self.segments if load in seg.loads]

    @property
    def truncated(self) -> bool:
        return any(seg.status in (SegmentStatus.UNSTABLE, SegmentStatus.STEP_FAILURE) for seg in self.segments)


def step_rk4(rhs: Rhs, state: np.ndarray, dt: float) -> np.ndarray:
    """经典四阶 Runge-Kutta 单步，结果非有限时抛出 DivergenceError"""
    if not dt > 0:
        raise ValueError(f"dt 必须为正, 实际为 {dt}")
    k1 = rhs(state)
    k2 = rhs(state + 0.5 * dt * k1)
    k3 = rhs(state + 0.5 * dt * k2)
    k4 = rhs(state + dt * k3)
    result = state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(result)):
        raise DivergenceError("RK4 步后状态出现非有限值")
    return result


class TrapezoidalIntegrator:
    """
    隐式梯形法 y - x - h/2·(f(x) + f(y)) = 0

    牛顿迭代矩阵 I - h/2·J (J 为差分雅可比) 做 LU 分解后跨步复用，
    收敛变慢、步长变化或 reset() 之后重建。残差按 scale 归一化后取无穷范数。
    """

    def __init__(self, rhs: Rhs, scale: Optional[np.ndarray] = None,
                 newton_tol: float = NEWTON_TOL, newton_max: int = NEWTON_MAX):
        self.rhs = rhs
        self.scale = None if scale is None else np.asarray(scale, dtype=float)
        self.newton_tol = newton_tol
        self.newton_max = newton_max
        self.last_iterations = 0
        self._lu = None
        self._lu_h = None
        self._f_cache: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def reset(self):
        self._lu = None
        self._lu_h = None
        self._f_cache = None

    def _norm(self, residual: np.ndarray) -> float:
        if self.scale is None:
            return float(np.max(np.abs(residual)))
        return float(np.max(np.abs(residual) / self.scale))

    def _f(self, x: np.ndarray) -> np.ndarray:
        if self._f_cache is not None and self._f_cache[0] is x:
            return self._f_cache[1]
        return self.rhs(x)

    def _refresh(self, y: np.ndarray, fy: np.ndarray, h: float):
        n = y.size
        scale = np.ones(n) if self.scale is None else self.scale
        jac = np.empty((n, n))
        for k in range(n):
            delta = 1.5e-8 * max(abs(y[k]), scale[k])
            shifted = y.copy()
            shifted[k] += delta
            jac[:, k] = (self.rhs(shifted) - fy) / delta
        self._lu = lu_factor(np.eye(n) - 0.5 * h * jac, check_finite=False)
        self._lu_h = h

    def _newton(self, x: np.ndarray, fx: np.ndarray, h: float):
        y, fy = x.copy(), fx
        residual = -h * fx
        norm = self._norm(residual)
        for iteration in range(self.newton_max):
            if norm <= self.newton_tol:
                return True, y, fy, iteration, norm
            delta = lu_solve(self._lu, -residual, check_finite=False)
            damping = 1.0
            while True:
                trial = y + damping * delta
                try:
                    f_trial = self.rhs(trial)
                    r_trial = trial - x - 0.5 * h * (fx + f_trial)
                    n_trial = self._norm(r_trial)
                except SingularityError:
                    f_trial, r_trial, n_trial = None, None, math.inf
                if n_trial < norm or damping <= 1.0 / 64.0:
                    break
                damping *= 0.5
            if not math.isfinite(n_trial):
                return False, y, fy, iteration + 1, n_trial
            y, fy, residual, norm = trial, f_trial, r_trial, n_trial
        return norm <= self.newton_tol, y, fy, self.newton_max, norm

    def step(self, x: np.ndarray, h: float, t: Optional[float] = None) -> np.ndarray:
        """
        推进一步

        Raises:
            StepFailure: 重建雅可比后牛顿迭代仍未收敛
        """
        if not h > 0:
            raise ValueError(f"dt 必须为正, 实际为 {h}")
        if x.size == 0:
            return x.copy()
        fx = self._f(x)
        iterations, norm = 0, math.nan
        for _ in range(2):
            if self._lu is None or self._lu_h != h:
                self._refresh(x, fx, h)
            ok, y, fy, iterations, norm = self._newton(x, fx, h)
            if ok:
                self.last_iterations = iterations
                if iterations > 4:
                    self._lu = None
                self._f_cache = (y, fy)
                return y
            self._lu = None
        raise StepFailure(f"梯形法牛顿迭代未收敛 (迭代 {iterations} 次, 残差 {norm:.3e})",
                          t=t, iterations=iterations, residual=norm)


def step_trapezoidal(rhs: Rhs, state: np.ndarray, dt: float,
                     newton_tol: float = NEWTON_TOL, newton_max: int = NEWTON_MAX,
                     scale: Optional[np.ndarray] = None) -> np.ndarray:
    """单步隐式梯形法 (每次调用重新计算雅可比)"""
    return TrapezoidalIntegrator(rhs, scale, newton_tol, newton_max).step(np.asarray(state, dtype=float), dt)


def _step_count(span: float, dt: float) -> int:
    ratio = span / dt
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
        return int(nearest)
    return max(1, math.ceil(ratio))


@dataclass(frozen=True)
class _Interval:
    t_start: float
    t_end: float
    steps: int

    @property
    def h(self) -> float:
        return (self.t_end - self.t_start) / self.steps


def _intervals(scenario: Scenario) -> List[_Interval]:
    """所有事件时刻切分出的公共步长网格 (各子网共用，保证记录时刻一致)"""
    points = sorted({e.t for e in scenario.events if 0 < e.t < scenario.t_end})
    bounds = [0.0] + points + ([scenario.t_end] if scenario.t_end > 0 else [])
    return [_Interval(a, b, _step_count(b - a, scenario.dt)) for a, b in zip(bounds, bounds[1:])]


def _apply_events(grid: Microgrid, events: List[ParameterChange]) -> Microgrid:
    for event in events:
        model = update_model(grid.load(event.target).model, event.changes)
        grid = grid.with_load_model(event.target, model)
    return grid


def _check_divergence(system: AssembledSystem, state: np.ndarray, t: float):
    co = system.co_energy(state)
    if not np.all(np.isfinite(co)):
        raise DivergenceError(f"t={t:.6g}s 状态出现非有限值", t=t)
    peak = float(np.max(np.abs(co))) if co.size else 0.0
    if peak > DIVERGENCE_LIMIT:
        raise DivergenceError(f"t={t:.6g}s 状态幅值 {peak:.3e} 超过发散阈值", t=t)


def _segment_reference(system: AssembledSystem, state: np.ndarray, t: float) -> Optional[np.ndarray]:
    try:
        return solve_steady_state(system, seed=state)
    except (StepFailure, SingularityError) as exc:
        logger.warning(f"⚠️ [仿真] t={t:g}s 段稳态求解失败, 本段 H_err 记为 NaN: {exc}")
        return None


@dataclass
class _IslandResult:
    system_index: Dict[str, slice]
    load_names: List[str]
    rows: List[np.ndarray] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    segments: List[SegmentRecord] = field(default_factory=list)


class _IslandRun:
    """单个子网的分段积分"""

    def __init__(self, scenario: Scenario, intervals: List[_Interval]):
        self.scenario = scenario
        self.intervals = intervals
        self.groups = {t: list(group) for t, group in groupby(scenario.events, key=lambda e: e.t)}

    def _stepper(self, system: AssembledSystem):
        s = self.scenario
        if s.integrator is Integrator.RK4:
            return lambda state, h, t: step_rk4(system.rhs, state, h)
        integrator = TrapezoidalIntegrator(system.rhs, system.state_scale(), s.newton_tol, s.newton_max)
        return integrator.step

    def _open_segment(self, result: _IslandResult, grid: Microgrid, system: AssembledSystem,
                      state: np.ndarray, t_start: float, t_end: float) -> SegmentRecord:
        reference = _segment_reference(system, state, t_start)
        segment = SegmentRecord(
            index=len(result.segments),
            loads=tuple(result.load_names),
            t_start=t_start,
            t_end=t_end,
            models={node.name: node.model for node in grid.loads},
            reference=reference,
        )
        if reference is not None:
            segment.h_start = system.error_hamiltonian(state, reference)
            amps = system.load_amplitudes(reference)
            segment.operating_amplitudes = {name: float(a) for name, a in zip(result.load_names, amps)}
        result.segments.append(segment)
        return segment

    def _record(self, result: _IslandResult, segment: SegmentRecord, system: AssembledSystem, state: np.ndarray):
        result.rows.append(system.co_energy(state))
        energy = math.nan if segment.reference is None else system.error_hamiltonian(state, segment.reference)
        result.energies.append(energy)
        segment.rows.append(len(result.rows) - 1)
        segment.energies.append(energy)

    def _next_event_time(self, after: float) -> float:
        later = [t for t in self.groups if t > after]
        return min(later) if later else self.scenario.t_end

    def run(self) -> _IslandResult:
        s = self.scenario
        grid = _apply_events(s.grid, self.groups.get(0.0, []))
        system = assemble(grid)
        result = _IslandResult(system_index=dict(system.index), load_names=list(system.load_names))
        state = system.initial_state(s.initial)
        segment = self._open_segment(result, grid, system, state, 0.0, self._next_event_time(0.0))
        self._record(result, segment, system, state)
        stepper = self._stepper(system)

        counter = 0
        stopped = False
        for interval in self.intervals:
            h = interval.h
            for m in range(1, interval.steps + 1):
                counter += 1
                t = interval.t_end if m == interval.steps else interval.t_start + m * h
                try:
                    state = stepper(state, h, t)
                    _check_divergence(system, state, t)
                except (DivergenceError, SingularityError) as exc:
                    segment.status, segment.t_stop, segment.message = SegmentStatus.UNSTABLE, t, str(exc)
                    logger.warning(f"💥 [仿真] {'/'.join(segment.loads)} 第 {segment.index} 段发散, 轨迹截断: {exc}")
                    stopped = True
                    break
                except StepFailure as exc:
                    segment.status, segment.t_stop = SegmentStatus.STEP_FAILURE, t
                    segment.message = f"{exc} (iterations={exc.iterations}, residual={exc.residual:.3e})"
                    logger.error(f"❌ [仿真] {'/'.join(segment.loads)} t={t:.6g}s 步失败, 轨迹截断: {exc}")
                    stopped = True
                    break
                if m == interval.steps or counter % s.record_every == 0:
                    self._record(result, segment, system, state)
            if stopped:
                break

            events = self.groups.get(interval.t_end)
            if events and interval.t_end > 0:
                grid = _apply_events(grid, events)
                system = assemble(grid)
                stepper = self._stepper(system)
                logger.info(f"🔄 [仿真] t={interval.t_end:g}s 参数变更: "
                            + "; ".join(f"{e.target} {dict(e.changes)}" for e in events))
                segment = self._open_segment(result, grid, system, state, interval.t_end,
                                             self._next_event_time(interval.t_end))

        if stopped:
            self._mark_unreached(result, grid, segment.t_stop)
        return result

    def _mark_unreached(self, result: _IslandResult, grid: Microgrid, t_stop: float):
        last = result.segments[-1]
        for t, events in self.groups.items():
            if t <= last.t_start or t == 0.0:
                continue
            grid = _apply_events(grid, events)
            result.segments.append(SegmentRecord(
                index=len(result.segments),
                loads=tuple(result.load_names),
                t_start=t,
                t_end=self._next_event_time(t),
                models={node.name: node.model for node in grid.loads},
                status=SegmentStatus.NOT_REACHED,
                message=f"轨迹在 t={t_stop:.6g}s 截断",
            ))


def _row_times(intervals: List[_Interval], record_every: int) -> List[float]:
    times = [0.0]
    counter = 0
    for interval in intervals:
        for m in range(1, interval.steps + 1):
            counter += 1
            if m == interval.steps or counter % record_every == 0:
                times.append(interval.t_end if m == interval.steps else interval.t_start + m * interval.h)
    return times


def run_scenario(s: Scenario) -> Trace:
    """
    按事件分段积分整个场景

    理想电压源把网络切成互不耦合的子网，各子网在公共时间网格上独立积分；
    某子网发散或步失败时只截断该子网 (其列之后为 NaN)，所有子网都停止时轨迹截断。

    Args:
        s: 仿真场景

    Returns:
        Trace
    """
    full = assemble(s.grid)
    intervals = _intervals(s)
    all_times = _row_times(intervals, s.record_every)
    islands = s.grid.islands() or [s.grid]
    logger.info(f"🚀 [仿真] 开始: t_end={s.t_end:g}s, dt={s.dt:g}s, 积分器={s.integrator.value}, "
                f"子网 {len(islands)} 个, 事件 {len(s.events)} 个")

    results = [_IslandRun(s.restricted(island), intervals).run() for island in islands]

    n_rows = max(len(r.rows) for r in results)
    values = np.full((n_rows, full.dim), np.nan)
    amplitudes = np.full((n_rows, len(full.load_names)), np.nan)
    h_err = np.zeros(n_rows)
    segments: List[SegmentRecord] = []
    for r in results:
        island_rows = np.vstack(r.rows)
        for name, island_slice in r.system_index.items():
            values[:len(r.rows), full.index[name]] = island_rows[:, island_slice]
        energies = np.full(n_rows, np.nan)
        energies[:len(r.energies)] = r.energies
        h_err = h_err + energies
        segments.extend(r.segments)

    for k, name in enumerate(full.load_names):
        cols = values[:, full.index[name]]
        amplitudes[:, k] = np.hypot(cols[:, 0], cols[:, 1])

    state_columns = []
    for name in full.line_names + full.load_names:
        state_columns += [f"{name}.d", f"{name}.q"]

    segments.sort(key=lambda seg: (seg.t_start, full.load_names.index(seg.loads[0]) if seg.loads else -1))
    trace = Trace(state_columns, list(full.load_names), np.array(all_times[:n_rows]), values, amplitudes, h_err, segments)
    unstable = sum(seg.status in (SegmentStatus.UNSTABLE, SegmentStatus.STEP_FAILURE) for seg in segments)
    logger.info(f"✅ [仿真] 完成: 记录 {n_rows} 行, 分段 {len(segments)} 个, 截断 {unstable} 个")
    return trace


def detect_steady_state(trace: Trace, window: float, tol: float) -> List[Optional[bool]]:
    """
    逐段判定是否已稳定: 段末 window 秒内每个负荷电压幅值的极差 ≤ tol

    Returns:
        与 trace.segments 对齐；发散/步失败为 False，未到达或无记录为 None
    """
    verdicts: List[Optional[bool]] = []
    for seg in trace.segments:
        if seg.status in (SegmentStatus.UNSTABLE, SegmentStatus.STEP_FAILURE):
            verdicts.append(False)
            continue
        if seg.status is SegmentStatus.NOT_REACHED or not seg.rows:
            verdicts.append(None)
            continue
        span = seg.t_end - seg.t_start
        effective = window
        if window > span:
            logger.warning(f"⚠️ [稳态] 窗口 {window:g}s 长于第 {seg.index} 段 ({span:g}s)，按段长截取")
            effective = span
        rows = np.array(seg.rows)
        times = trace.times[rows]
        mask = times >= times[-1] - effective - 1e-12
        settled = True
        for name in seg.loads:
            amps = trace.amplitude(name)[rows][mask]
            if not np.all(np.isfinite(amps)) or float(np.max(amps) - np.min(amps)) > tol:
                settled = False
                break
        verdicts.append(settled)
    return verdicts


def energy_nonincreasing(trace: Trace, segment: SegmentRecord, rel_slack: float = 1e-9) -> Optional[bool]:
    """
    误差哈密顿量在本段记录点之间是否不增

    仅在本段稳态已知、且所有经过的电压幅值都被判定为严格无源时适用，否则返回 None。
    判据: H[k+1] - H[k] ≤ rel_slack·max(H[k], H[段首])
    """
    if segment.reference is None or not segment.rows or segment.status is not SegmentStatus.COMPLETED:
        return None
    rows = np.array(segment.rows)
    for name in segment.loads:
        model = segment.models[name]
        for amp in trace.amplitude(name)[rows]:
            if not math.isfinite(amp) or not certify(model, float(amp)).is_passive:
                return None
    series = np.array([segment.h_start] + list(segment.energies))
    if not np.all(np.isfinite(series)):
        return None
    first = series[0]
    for prev, nxt in zip(series, series[1:]):
        if nxt - prev > rel_slack * max(prev, first):
            return False
    return True


# 发散与步失败都说明段内轨迹离开了工作点
STABILITY_BY_STATUS = {
    "settled": "stable",
    "not_settled": "undetermined",
    SegmentStatus.UNSTABLE.value: "unstable",
    SegmentStatus.STEP_FAILURE.value: "unstable",
}


def segment_status(seg: SegmentRecord, is_settled: Optional[bool]) -> str:
    if seg.status is not SegmentStatus.COMPLETED:
        return seg.status.value
    if is_settled is None:
        return "no_samples"
    return "settled" if is_settled else "not_settled"


@dataclass(frozen=True)
class SegmentSummary:
    load: str
    segment: int
    t_start: float
    t_end: float
    parameters: str
    v_operating: float
    verdict: str
    lambda_min: float
    window_lo: float
    window_hi: float
    limits: str
    status: str
    stability: str
    energy_decreasing: Optional[bool]


def segment_summary(trace: Trace, scenario: Scenario, window: float, tol: float, *,
                    v_range: Optional[Tuple[float, float]] = None,
                    grid: int = WINDOW_GRID_POINTS, bisect_tol: float = WINDOW_BISECT_TOL,
                    rel_slack: float = 1e-9) -> List[SegmentSummary]:
    """
    每个负荷每一段的汇总: 当时参数、稳态幅值、该幅值处的证书、无源窗口、稳定性结论

    Args:
        window, tol: 稳态判定窗口 (s) 与幅值容差 (V)
        v_range: 无源窗口扫描范围，缺省为 (1, 2.5·最大电源幅值)
    """
    if v_range is None:
        peak = max((src.v_fixed.amplitude() for src in scenario.grid.sources), default=400.0)
        v_range = (1.0, 2.5 * peak)
    settled = detect_steady_state(trace, window, tol)
    windows: Dict[LoadModel, object] = {}
    rows: List[SegmentSummary] = []
    for seg, is_settled in zip(trace.segments, settled):
        status = segment_status(seg, is_settled)
        stability = STABILITY_BY_STATUS.get(status, "n/a")
        energy_ok = energy_nonincreasing(trace, seg, rel_slack)
        for name in seg.loads:
            model = seg.models[name]
            if model not in windows:
                windows[model] = passive_voltage_window(model, v_range[0], v_range[1], grid, bisect_tol)
            win = windows[model]
            v_op = seg.operating_amplitudes.get(name, math.nan)
            verdict, lambda_min = "n/a", math.nan
            lo = hi = math.nan
            if math.isfinite(v_op):
                cert = certify(model, v_op)
                verdict, lambda_min = cert.verdict.value, cert.lambda_min
                for a, b in win.intervals:
                    if a <= v_op <= b:
                        lo, hi = a, b
            rows.append(SegmentSummary(
                load=name,
                segment=seg.index,
                t_start=seg.t_start,
                t_end=seg.t_end,
                parameters=describe_model(model),
                v_operating=v_op,
                verdict=verdict,
                lambda_min=lambda_min,
                window_lo=lo,
                window_hi=hi,
                limits=";".join(f"{v:.2f}" for v in passive_voltage_limits(model)),
                status=status,
                stability=stability,
                energy_decreasing=energy_ok,
            ))
    return rows
