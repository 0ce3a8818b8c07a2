#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 10:05 AM
@File       : passivity.py
@Description: 负荷严格无源性判定
              - 雅可比对称部分 [[a, b], [b, c]] 的闭式解与数值差分校验
              - 闭式特征值 / 充分条件 -> PassivityCertificate
              - 无源电压窗口 (网格扫描 + 二分) 与解析临界电压
              - 增量单调性抽样检验
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from config.settings import LAMBDA_TOL, V_EPS, WINDOW_BISECT_TOL, WINDOW_GRID_POINTS
from core.exceptions import SingularityError, VoltageDomainError
from core.loads import (
    DqVector, ExpParams, LoadModel, TwoTierParams, ZipParams,
    active_branch, load_current, model_kind,
)
from utils.logger import logger


class Verdict(str, Enum):
    STRICTLY_PASSIVE = "StrictlyPassive"
    MARGINAL = "Marginal"
    VIOLATED = "Violated"


@dataclass(frozen=True)
class SymmetricPart2x2:
    """雅可比对称部分 [[a, b], [b, c]] (单位 S)"""
    a: float
    b: float
    c: float

    def eigenvalues(self) -> Tuple[float, float]:
        """(λ1, λ2)，λ1 ≥ λ2"""
        mean = 0.5 * (self.a + self.c)
        radius = math.hypot(0.5 * (self.a - self.c), self.b)
        return mean + radius, mean - radius

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b, self.c]], dtype=float)


@dataclass(frozen=True)
class PassivityCertificate:
    """
    某电压幅值下的无源性结论

    Attributes:
        v_amp: 评估电压 (V)
        lambda_min / lambda_max: 对称部分特征值 (S)
        verdict: 判定结果
        residual_1: 条件 (i) 左端 (ZIP: Y_P + I_P/2V；指数: n_p·P0)
        residual_2: 条件 (ii) 左右之差，> 0 即满足
        branch: 实际评估的模型分支 ("zip" / "exp")
    """
    v_amp: float
    lambda_min: float
    lambda_max: float
    verdict: Verdict
    residual_1: float = float("nan")
    residual_2: float = float("nan")
    branch: str = ""

    @property
    def is_passive(self) -> bool:
        return self.verdict is Verdict.STRICTLY_PASSIVE


@dataclass(frozen=True)
class VoltageWindow:
    """扫描区间 [v_min, v_max] 内严格无源的电压区间 (有序、互不相交)"""
    intervals: Tuple[Tuple[float, float], ...]
    v_min: float
    v_max: float

    @property
    def is_empty(self) -> bool:
        return len(self.intervals) == 0

    def contains(self, v_amp: float) -> bool:
        return any(lo <= v_amp <= hi for lo, hi in self.intervals)

    def gaps(self) -> List[Tuple[float, float]]:
        """窗口在扫描区间内的补集"""
        result = []
        cursor = self.v_min
        for lo, hi in self.intervals:
            if lo > cursor:
                result.append((cursor, lo))
            cursor = hi
        if cursor < self.v_max:
            result.append((cursor, self.v_max))
        return result


@dataclass
class MonotonicityReport:
    """增量单调性检验结果: (v - w)ᵀ(i(v) - i(w)) 是否恒正"""
    samples: int
    violations: int = 0
    min_inner_product: float = float("inf")
    worst_pair: Optional[Tuple[DqVector, DqVector]] = None
    violating_pairs: List[Tuple[DqVector, DqVector]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, v: DqVector, w: DqVector, inner: float, keep: int = 20):
        if inner < self.min_inner_product:
            self.min_inner_product = inner
            self.worst_pair = (v, w)
        if inner <= 0:
            self.violations += 1
            if len(self.violating_pairs) < keep:
                self.violating_pairs.append((v, w))


def _amplitude_checked(v: DqVector) -> float:
    v_amp = v.amplitude()
    if not v_amp > V_EPS:
        raise SingularityError(f"dq 电压幅值 {v_amp} ≤ v_eps={V_EPS}")
    return v_amp


def _symmetric_from_slopes(alpha: float, d_alpha: float, d_beta: float, v: DqVector, v_amp: float) -> SymmetricPart2x2:
    # α·I + (α'/V) v vᵀ 的对称部分加上 (β'/V) S v vᵀ 的对称部分，β·S 是斜对称的
    dd = v.d * v.d / v_amp
    qq = v.q * v.q / v_amp
    dq = v.d * v.q / v_amp
    a = alpha + d_alpha * dd + d_beta * dq
    b = d_alpha * dq + 0.5 * d_beta * (qq - dd)
    c = alpha + d_alpha * qq - d_beta * dq
    return SymmetricPart2x2(a, b, c)


def symmetric_jacobian_zip(p: ZipParams, v: DqVector) -> SymmetricPart2x2:
    v_amp = _amplitude_checked(v)
    alpha = p.y_p + p.i_p / v_amp + p.p_p / v_amp ** 2
    d_alpha = -p.i_p / v_amp ** 2 - 2.0 * p.p_p / v_amp ** 3
    d_beta = -p.i_q / v_amp ** 2 - 2.0 * p.p_q / v_amp ** 3
    return _symmetric_from_slopes(alpha, d_alpha, d_beta, v, v_amp)


def symmetric_jacobian_exp(p: ExpParams, v: DqVector) -> SymmetricPart2x2:
    v_amp = _amplitude_checked(v)
    ratio = v_amp / p.v0
    alpha = p.p0 * ratio ** p.n_p / v_amp ** 2
    beta = p.q0 * ratio ** p.n_q / v_amp ** 2
    # α ∝ V^(n_p-2)，故 α' = (n_p-2)·α/V
    d_alpha = (p.n_p - 2.0) * alpha / v_amp
    d_beta = (p.n_q - 2.0) * beta / v_amp
    return _symmetric_from_slopes(alpha, d_alpha, d_beta, v, v_amp)


def symmetric_jacobian(model: LoadModel, v: DqVector) -> SymmetricPart2x2:
    """
    电流函数雅可比的对称部分 (闭式)

    Args:
        model: 负荷模型，两段式取 V 所在分支
        v: dq 电压

    Returns:
        SymmetricPart2x2
    """
    v_amp = _amplitude_checked(v)
    branch = active_branch(model, v_amp)
    if isinstance(branch, ZipParams):
        return symmetric_jacobian_zip(branch, v)
    return symmetric_jacobian_exp(branch, v)


def numeric_jacobian(model: LoadModel, v: DqVector, h: Optional[float] = None) -> np.ndarray:
    """
    中心差分雅可比 (i(v + h e_k) - i(v - h e_k)) / 2h，作为闭式解的校验

    Args:
        h: 差分步长，缺省为 1e-6·V
    """
    v_amp = v.amplitude()
    if h is None:
        h = 1e-6 * v_amp
    if not h > 0:
        raise VoltageDomainError(f"差分步长必须为正, 实际为 {h}")
    if not v_amp > V_EPS + h:
        raise VoltageDomainError(f"差分步长 {h} 相对电压幅值 {v_amp} 过大 (需 V > v_eps + h)")
    jac = np.empty((2, 2))
    for k, step in enumerate((DqVector(h, 0.0), DqVector(0.0, h))):
        plus = load_current(model, v + step)
        minus = load_current(model, v - step)
        jac[0, k] = (plus.d - minus.d) / (2.0 * h)
        jac[1, k] = (plus.q - minus.q) / (2.0 * h)
    return jac


def _require_amplitude(v_amp: float):
    if not v_amp > V_EPS or not math.isfinite(v_amp):
        raise VoltageDomainError(f"电压幅值必须大于 v_eps={V_EPS}, 实际为 {v_amp}")


def eigenvalues_zip(p: ZipParams, v_amp: float) -> Tuple[float, float]:
    """λ1,2 = Y_P + I_P/2V ± sqrt(¼(I_P²+I_Q²)V² + (I_P P_P + I_Q P_Q)V + P_P² + P_Q²) / V²"""
    _require_amplitude(v_amp)
    centre = p.y_p + p.i_p / (2.0 * v_amp)
    radicand = (0.25 * (p.i_p ** 2 + p.i_q ** 2) * v_amp ** 2
                + (p.i_p * p.p_p + p.i_q * p.p_q) * v_amp
                + p.p_p ** 2 + p.p_q ** 2)
    radius = math.sqrt(radicand) / v_amp ** 2
    return centre + radius, centre - radius


def eigenvalues_exp(p: ExpParams, v_amp: float) -> Tuple[float, float]:
    """λ1,2 = (n_p P0 r^n_p ± sqrt((n_p-2)² P0² r^2n_p + (n_q-2)² Q0² r^2n_q)) / 2V²，r = V/V0"""
    _require_amplitude(v_amp)
    ratio = v_amp / p.v0
    active = p.p0 * ratio ** p.n_p
    reactive = p.q0 * ratio ** p.n_q
    centre = p.n_p * active
    radius = math.hypot((p.n_p - 2.0) * active, (p.n_q - 2.0) * reactive)
    scale = 2.0 * v_amp ** 2
    return (centre + radius) / scale, (centre - radius) / scale


def eigenvalues(model: LoadModel, v_amp: float) -> Tuple[float, float]:
    branch = active_branch(model, v_amp)
    if isinstance(branch, ZipParams):
        return eigenvalues_zip(branch, v_amp)
    return eigenvalues_exp(branch, v_amp)


def _verdict(lambda_min: float, conditions_hold: bool) -> Verdict:
    if abs(lambda_min) <= LAMBDA_TOL:
        return Verdict.MARGINAL
    return Verdict.STRICTLY_PASSIVE if conditions_hold else Verdict.VIOLATED


def check_zip_conditions(p: ZipParams, v_amp: float) -> PassivityCertificate:
    """
    ZIP 严格无源的充分条件

    (i)  Y_P + I_P/(2V) > 0
    (ii) Y_P²V⁴ + Y_P I_P V³ > ¼I_Q²V² + (I_P P_P + I_Q P_Q)V + (P_P² + P_Q²)

    (ii) 由 λ2 > 0 两边平方得到，左右之差等于 V⁴·λ1·λ2。
    """
    lambda_max, lambda_min = eigenvalues_zip(p, v_amp)
    residual_1 = p.y_p + p.i_p / (2.0 * v_amp)
    lhs = p.y_p ** 2 * v_amp ** 4 + p.y_p * p.i_p * v_amp ** 3
    rhs = (0.25 * p.i_q ** 2 * v_amp ** 2
           + (p.i_p * p.p_p + p.i_q * p.p_q) * v_amp
           + p.p_p ** 2 + p.p_q ** 2)
    residual_2 = lhs - rhs
    verdict = _verdict(lambda_min, residual_1 > 0 and residual_2 > 0)
    return PassivityCertificate(v_amp, lambda_min, lambda_max, verdict, residual_1, residual_2, "zip")


def check_exp_conditions(p: ExpParams, v_amp: float) -> PassivityCertificate:
    """
    指数负荷严格无源的充分条件

    (i)  n_p·P0 > 0
    (ii) 4(n_p - 1)·P0²·r^(2n_p) > (n_q - 2)²·Q0²·r^(2n_q)，r = V/V0
    """
    lambda_max, lambda_min = eigenvalues_exp(p, v_amp)
    ratio = v_amp / p.v0
    residual_1 = p.n_p * p.p0
    residual_2 = (4.0 * (p.n_p - 1.0) * p.p0 ** 2 * ratio ** (2.0 * p.n_p)
                  - (p.n_q - 2.0) ** 2 * p.q0 ** 2 * ratio ** (2.0 * p.n_q))
    verdict = _verdict(lambda_min, residual_1 > 0 and residual_2 > 0)
    return PassivityCertificate(v_amp, lambda_min, lambda_max, verdict, residual_1, residual_2, "exp")


def certify(model: LoadModel, v_amp: float) -> PassivityCertificate:
    """按模型类型分派的无源性判定，两段式评估 V 所在分支"""
    _require_amplitude(v_amp)
    branch = active_branch(model, v_amp)
    if isinstance(branch, ZipParams):
        return check_zip_conditions(branch, v_amp)
    if isinstance(branch, ExpParams):
        return check_exp_conditions(branch, v_amp)
    raise TypeError(f"未知负荷模型: {type(model).__name__}")


def _bisect_boundary(model: LoadModel, lo: float, hi: float, lo_passive: bool, tol: float) -> float:
    """在 [lo, hi] 内二分无源/非无源的分界，返回最终区间中无源一侧的端点"""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if certify(model, mid).is_passive == lo_passive:
            lo = mid
        else:
            hi = mid
    return lo if lo_passive else hi


def passive_voltage_window(model: LoadModel, v_min: float, v_max: float,
                           grid: int = WINDOW_GRID_POINTS,
                           tol: float = WINDOW_BISECT_TOL) -> VoltageWindow:
    """
    扫描 [v_min, v_max] 内 λ2 的符号，对每个变号二分到宽度 ≤ tol

    Args:
        model: 负荷模型
        v_min, v_max: 扫描范围 (V)
        grid: 线性网格点数 (≥ 2)
        tol: 二分精度 (V)

    Returns:
        VoltageWindow，空窗口是合法结果
    """
    if not (V_EPS < v_min < v_max) or not math.isfinite(v_max):
        raise VoltageDomainError(f"扫描范围无效: v_eps < v_min < v_max 不成立 ({v_min}, {v_max})")
    if grid < 2:
        raise ValueError(f"网格点数至少为 2, 实际为 {grid}")
    if not tol > 0:
        raise ValueError(f"二分精度必须为正, 实际为 {tol}")

    points = np.linspace(v_min, v_max, int(grid))
    flags = [certify(model, float(v)).is_passive for v in points]

    intervals: List[Tuple[float, float]] = []
    start = float(points[0]) if flags[0] else None
    for k in range(len(points) - 1):
        if flags[k] == flags[k + 1]:
            continue
        boundary = _bisect_boundary(model, float(points[k]), float(points[k + 1]), flags[k], tol)
        if flags[k]:
            if start is not None and boundary > start:
                intervals.append((start, boundary))
            start = None
        else:
            start = boundary
    if start is not None and float(points[-1]) > start:
        intervals.append((start, float(points[-1])))

    return VoltageWindow(tuple(intervals), float(v_min), float(v_max))


def passive_voltage_limits(model: LoadModel) -> List[float]:
    """
    解析求出无源/非无源的临界电压 (升序)

    ZIP: 条件 (ii) 的四次多项式正实根；指数: V0·(c_R/c_L)^(1/(2n_p - 2n_q))；
    两段式: 上段在阈值以上的临界点，阈值处结论跳变时也算一个。
    """
    if isinstance(model, ZipParams):
        coefficients = [
            model.y_p ** 2,
            model.y_p * model.i_p,
            -0.25 * model.i_q ** 2,
            -(model.i_p * model.p_p + model.i_q * model.p_q),
            -(model.p_p ** 2 + model.p_q ** 2),
        ]
        if not any(coefficients):
            return []
        roots = np.roots(np.trim_zeros(coefficients, "f"))
        limits = [float(r.real) for r in roots
                  if abs(r.imag) <= 1e-9 * max(1.0, abs(r)) and r.real > V_EPS]
        return sorted(limits)

    if isinstance(model, ExpParams):
        c_left = 4.0 * (model.n_p - 1.0) * model.p0 ** 2
        c_right = (model.n_q - 2.0) ** 2 * model.q0 ** 2
        if model.n_p == model.n_q or c_left <= 0 or c_right <= 0:
            return []
        return [model.v0 * (c_right / c_left) ** (1.0 / (2.0 * model.n_p - 2.0 * model.n_q))]

    if isinstance(model, TwoTierParams):
        limits = [v for v in passive_voltage_limits(model.upper) if v > model.v_threshold]
        below = certify(model.z_only, model.v_threshold).is_passive
        if below != certify(model, model.v_threshold).is_passive:
            limits.append(model.v_threshold)
        return sorted(limits)

    raise TypeError(f"未知负荷模型: {type(model).__name__}")


def _sample_voltage(rng: np.random.Generator, region: Tuple[float, float]) -> DqVector:
    amplitude = rng.uniform(region[0], region[1])
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return DqVector.from_polar(amplitude, angle)


def _inner_increment(model: LoadModel, v: DqVector, w: DqVector) -> float:
    return (v - w).dot(load_current(model, v) - load_current(model, w))


def _check_region(region: Tuple[float, float], samples: int):
    lo, hi = region
    if not (V_EPS < lo <= hi):
        raise VoltageDomainError(f"抽样区间无效: ({lo}, {hi})")
    if samples < 1:
        raise ValueError(f"样本数至少为 1, 实际为 {samples}")


def incremental_monotonicity_test(model: LoadModel, region: Tuple[float, float],
                                  samples: int, seed: int) -> MonotonicityReport:
    """
    随机抽取电压对 (v, w)，检查 (v - w)ᵀ(i(v) - i(w)) > 0

    幅值在 region 内均匀分布，相角在 [0, 2π) 均匀分布，结果由 seed 唯一确定。
    """
    _check_region(region, samples)
    rng = np.random.default_rng(seed)
    report = MonotonicityReport(samples=samples)
    for _ in range(samples):
        v = _sample_voltage(rng, region)
        w = _sample_voltage(rng, region)
        report.record(v, w, _inner_increment(model, v, w))
    if report.violations:
        logger.warning(f"⚠️ [单调性] {model_kind(model)} 在 {region} 内 {report.violations}/{samples} 对违反增量不等式")
    return report


def directed_violation_search(model: LoadModel, region: Tuple[float, float],
                              samples: int, seed: int) -> MonotonicityReport:
    """
    沿对称部分最小特征向量方向取短距电压对 v ± ε·e_min (ε = 1e-4·V)

    λ2 < 0 的电压处该方向的增量内积为负，是随机抽样最难碰到的最坏方向。
    """
    _check_region(region, samples)
    rng = np.random.default_rng(seed)
    report = MonotonicityReport(samples=samples)
    for _ in range(samples):
        centre = _sample_voltage(rng, region)
        _, vectors = np.linalg.eigh(symmetric_jacobian(model, centre).as_array())
        direction = DqVector.from_array(vectors[:, 0])
        step = direction * (1e-4 * centre.amplitude())
        v, w = centre + step, centre - step
        report.record(v, w, _inner_increment(model, v, w))
    return report
