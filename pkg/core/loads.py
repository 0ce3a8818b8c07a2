#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 9:40 AM
@File       : loads.py
@Description: 静态交流负荷模型 (ZIP / 指数 / 两段式)
              - 电压相关的有功/无功功率
              - dq 坐标系下的电流注入函数 i_L(v)
              - 参数变更 (仿真事件使用)
"""
import math
from dataclasses import dataclass, fields, replace
from typing import Mapping, Tuple, Union

import numpy as np

from config.settings import V_EPS, TWO_TIER_RATIO
from core.exceptions import LoadParameterError, SingularityError, VoltageDomainError


@dataclass(frozen=True)
class DqVector:
    """
    以 ω0 旋转的 dq 坐标系中的二维量 (电压或电流)

    Attributes:
        d: d 轴分量
        q: q 轴分量
    """
    d: float
    q: float

    def amplitude(self) -> float:
        """幅值 (2-范数)，V² = v_d² + v_q²"""
        return math.hypot(self.d, self.q)

    def rotated(self, phi: float) -> "DqVector":
        """按 R(φ) = [[cos, -sin], [sin, cos]] 旋转"""
        c, s = math.cos(phi), math.sin(phi)
        return DqVector(c * self.d - s * self.q, s * self.d + c * self.q)

    def dot(self, other: "DqVector") -> float:
        return self.d * other.d + self.q * other.q

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.q], dtype=float)

    @classmethod
    def from_array(cls, values) -> "DqVector":
        return cls(float(values[0]), float(values[1]))

    @classmethod
    def from_polar(cls, amplitude: float, angle: float) -> "DqVector":
        return cls(amplitude * math.cos(angle), amplitude * math.sin(angle))

    def __add__(self, other: "DqVector") -> "DqVector":
        return DqVector(self.d + other.d, self.q + other.q)

    def __sub__(self, other: "DqVector") -> "DqVector":
        return DqVector(self.d - other.d, self.q - other.q)

    def __mul__(self, k: float) -> "DqVector":
        return DqVector(self.d * k, self.q * k)

    __rmul__ = __mul__


def _check_non_negative(owner: object, names: Tuple[str, ...]):
    for name in names:
        value = getattr(owner, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise LoadParameterError(f"{type(owner).__name__}.{name} 必须是有限实数, 实际为 {value!r}")
        if value < 0:
            raise LoadParameterError(f"{type(owner).__name__}.{name} 不能为负 (参数非负假设), 实际为 {value}")


@dataclass(frozen=True)
class ZipParams:
    """
    ZIP 负荷的分组参数

    P(V) = y_p·V² + i_p·V + p_p
    Q(V) = y_q·V² + i_q·V + p_q

    Attributes:
        y_p, y_q: 恒阻抗部分，以导纳表示 (S)
        i_p, i_q: 恒电流部分 (A)
        p_p, p_q: 恒功率部分 (W / VAr)
    """
    y_p: float = 0.0
    i_p: float = 0.0
    p_p: float = 0.0
    y_q: float = 0.0
    i_q: float = 0.0
    p_q: float = 0.0

    def __post_init__(self):
        _check_non_negative(self, ("y_p", "i_p", "p_p", "y_q", "i_q", "p_q"))

    @property
    def is_admittance_only(self) -> bool:
        return self.i_p == 0 and self.i_q == 0 and self.p_p == 0 and self.p_q == 0

    @classmethod
    def from_coefficients(cls, p0: float, q0: float, v0: float,
                          a_z: float, a_i: float, a_p: float,
                          b_z: float, b_i: float, b_p: float) -> "ZipParams":
        """
        由额定功率和 ZIP 系数构造分组参数

        P(V) = P0·[a_z (V/V0)² + a_i (V/V0) + a_p]，Q 同理 (系数 b_*)。
        分组: y = a_z·P0/V0²，i = a_i·P0/V0，p = a_p·P0。

        Args:
            p0, q0: 额定有功/无功功率
            v0: 额定线电压有效值 (V)
            a_z, a_i, a_p: 有功 ZIP 系数
            b_z, b_i, b_p: 无功 ZIP 系数
        """
        if v0 <= 0:
            raise LoadParameterError(f"额定电压 v0 必须为正, 实际为 {v0}")
        return cls(
            y_p=a_z * p0 / v0 ** 2, i_p=a_i * p0 / v0, p_p=a_p * p0,
            y_q=b_z * q0 / v0 ** 2, i_q=b_i * q0 / v0, p_q=b_p * q0,
        )


@dataclass(frozen=True)
class ExpParams:
    """
    指数负荷: P = p0·(V/v0)^n_p，Q = q0·(V/v0)^n_q

    Attributes:
        p0, q0: 额定有功 (W) / 无功 (VAr)
        n_p, n_q: 电压指数 (无量纲，实数)
        v0: 额定线电压有效值 (V)
    """
    p0: float
    q0: float
    n_p: float
    n_q: float
    v0: float

    def __post_init__(self):
        _check_non_negative(self, ("p0", "q0", "n_p", "n_q", "v0"))
        if self.v0 <= 0:
            raise LoadParameterError(f"ExpParams.v0 必须为正, 实际为 {self.v0}")


@dataclass(frozen=True)
class TwoTierParams:
    """
    两段式负荷: V ≥ v_threshold 用 upper，否则退化为纯导纳 z_only

    Attributes:
        upper: 阈值以上有效的 ZIP 或指数模型
        z_only: 只含导纳项的 ZIP 模型
        v_threshold: 切换电压 (V)，一般取 0.7·V0
    """
    upper: Union[ZipParams, ExpParams]
    z_only: ZipParams
    v_threshold: float

    def __post_init__(self):
        if not isinstance(self.upper, (ZipParams, ExpParams)):
            raise LoadParameterError(f"TwoTierParams.upper 必须是 ZIP 或指数模型, 实际为 {type(self.upper).__name__}")
        if not isinstance(self.z_only, ZipParams) or not self.z_only.is_admittance_only:
            raise LoadParameterError("TwoTierParams.z_only 只能包含导纳项 (i_p=i_q=p_p=p_q=0)")
        if not math.isfinite(self.v_threshold) or self.v_threshold <= 0:
            raise LoadParameterError(f"TwoTierParams.v_threshold 必须为正, 实际为 {self.v_threshold}")

    @classmethod
    def from_upper(cls, upper: Union[ZipParams, ExpParams], v0: float = None,
                   z_only: ZipParams = None) -> "TwoTierParams":
        """
        由上段模型构造两段式模型

        Args:
            upper: 上段模型
            v0: 额定电压，指数模型可省略 (取 upper.v0)
            z_only: 下段导纳模型，省略时 ZIP 取其导纳项、指数模型取额定点导纳 p0/v0², q0/v0²
        """
        if v0 is None:
            if not isinstance(upper, ExpParams):
                raise LoadParameterError("ZIP 上段模型需要显式给出 v0")
            v0 = upper.v0
        if z_only is None:
            if isinstance(upper, ZipParams):
                z_only = ZipParams(y_p=upper.y_p, y_q=upper.y_q)
            else:
                z_only = ZipParams(y_p=upper.p0 / upper.v0 ** 2, y_q=upper.q0 / upper.v0 ** 2)
        return cls(upper=upper, z_only=z_only, v_threshold=TWO_TIER_RATIO * v0)


LoadModel = Union[ZipParams, ExpParams, TwoTierParams]


def _require_positive(v_amp: float):
    if not (v_amp > 0) or not math.isfinite(v_amp):
        raise VoltageDomainError(f"电压幅值必须为正, 实际为 {v_amp}")


def _require_regular(v: DqVector) -> float:
    """返回 V²，幅值过小时报奇异"""
    v_sq = v.d * v.d + v.q * v.q
    if not math.isfinite(v_sq) or v_sq <= V_EPS * V_EPS:
        raise SingularityError(f"dq 电压幅值 {math.sqrt(v_sq) if math.isfinite(v_sq) else v_sq} ≤ v_eps={V_EPS}")
    return v_sq


def power_zip(p: ZipParams, v_amp: float) -> Tuple[float, float]:
    """ZIP 有功/无功功率 (W, VAr)"""
    _require_positive(v_amp)
    active = p.y_p * v_amp ** 2 + p.i_p * v_amp + p.p_p
    reactive = p.y_q * v_amp ** 2 + p.i_q * v_amp + p.p_q
    return active, reactive


def power_exp(p: ExpParams, v_amp: float) -> Tuple[float, float]:
    """指数负荷有功/无功功率 (W, VAr)"""
    _require_positive(v_amp)
    ratio = v_amp / p.v0
    return p.p0 * ratio ** p.n_p, p.q0 * ratio ** p.n_q


def active_branch(model: LoadModel, v_amp: float) -> Union[ZipParams, ExpParams]:
    """两段式模型按幅值选分支 (阈值处取上段)，其它模型原样返回"""
    if isinstance(model, TwoTierParams):
        return model.upper if v_amp >= model.v_threshold else model.z_only
    return model


def load_power(model: LoadModel, v_amp: float) -> Tuple[float, float]:
    branch = active_branch(model, v_amp)
    if isinstance(branch, ZipParams):
        return power_zip(branch, v_amp)
    if isinstance(branch, ExpParams):
        return power_exp(branch, v_amp)
    raise TypeError(f"未知负荷模型: {type(model).__name__}")


def power_derivatives(model: LoadModel, v_amp: float) -> Tuple[float, float]:
    """dP/dV, dQ/dV (两段式取当前分支)"""
    _require_positive(v_amp)
    branch = active_branch(model, v_amp)
    if isinstance(branch, ZipParams):
        return 2.0 * branch.y_p * v_amp + branch.i_p, 2.0 * branch.y_q * v_amp + branch.i_q
    if isinstance(branch, ExpParams):
        ratio = v_amp / branch.v0
        return (branch.n_p * branch.p0 * ratio ** branch.n_p / v_amp,
                branch.n_q * branch.q0 * ratio ** branch.n_q / v_amp)
    raise TypeError(f"未知负荷模型: {type(model).__name__}")


def current_from_power(active: float, reactive: float, v: DqVector) -> DqVector:
    """
    由功率求 dq 电流: i = (1/V²)·[[P, Q], [-Q, P]]·v

    满足 P = v_d i_d + v_q i_q，Q = v_q i_d - v_d i_q。
    """
    v_sq = _require_regular(v)
    return DqVector((active * v.d + reactive * v.q) / v_sq,
                    (active * v.q - reactive * v.d) / v_sq)


def current_zip(p: ZipParams, v: DqVector) -> DqVector:
    v_sq = _require_regular(v)
    v_amp = math.sqrt(v_sq)
    i_d = ((p.p_p * v.d + p.p_q * v.q) / v_sq
           + (p.i_p * v.d + p.i_q * v.q) / v_amp
           + p.y_p * v.d + p.y_q * v.q)
    i_q = ((p.p_p * v.q - p.p_q * v.d) / v_sq
           + (p.i_p * v.q - p.i_q * v.d) / v_amp
           + p.y_p * v.q - p.y_q * v.d)
    return DqVector(i_d, i_q)


def current_exp(p: ExpParams, v: DqVector) -> DqVector:
    v_sq = _require_regular(v)
    log_v = 0.5 * math.log(v_sq)
    # V^(n-2) 走 exp((n-2)·ln V)
    g_p = p.p0 * math.exp((p.n_p - 2.0) * log_v) / p.v0 ** p.n_p
    g_q = p.q0 * math.exp((p.n_q - 2.0) * log_v) / p.v0 ** p.n_q
    return DqVector(g_p * v.d + g_q * v.q, g_p * v.q - g_q * v.d)


def current_twotier(p: TwoTierParams, v: DqVector) -> DqVector:
    _require_regular(v)
    branch = active_branch(p, v.amplitude())
    if isinstance(branch, ZipParams):
        return current_zip(branch, v)
    return current_exp(branch, v)


def load_current(model: LoadModel, v: DqVector) -> DqVector:
    """按模型类型分派的 i_L(v)"""
    if isinstance(model, ZipParams):
        return current_zip(model, v)
    if isinstance(model, ExpParams):
        return current_exp(model, v)
    if isinstance(model, TwoTierParams):
        return current_twotier(model, v)
    raise TypeError(f"未知负荷模型: {type(model).__name__}")


def model_kind(model: LoadModel) -> str:
    if isinstance(model, ZipParams):
        return "zip"
    if isinstance(model, ExpParams):
        return "exp"
    if isinstance(model, TwoTierParams):
        return "twotier"
    raise TypeError(f"未知负荷模型: {type(model).__name__}")


def update_model(model: LoadModel, changes: Mapping[str, float]) -> LoadModel:
    """
    返回修改了若干参数的新模型 (原模型不变)

    两段式模型用点号路径: "upper.p_p"、"z_only.y_q"、"v_threshold"。

    Raises:
        LoadParameterError: 未知参数名、非数值、或修改后违反约束
    """
    nested: dict = {}
    flat: dict = {}
    for key, value in changes.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise LoadParameterError(f"参数 {key} 的取值必须是数值, 实际为 {value!r}")
        head, _, rest = key.partition(".")
        if rest:
            nested.setdefault(head, {})[rest] = float(value)
        else:
            flat[head] = float(value)

    names = {f.name for f in fields(model)}
    for key in list(flat) + list(nested):
        if key not in names:
            raise LoadParameterError(f"{model_kind(model)} 模型没有参数 {key!r}")
    for key in flat:
        if key in ("upper", "z_only"):
            raise LoadParameterError(f"{key} 是子模型，请用 {key}.<参数> 形式修改")
    if nested and not isinstance(model, TwoTierParams):
        raise LoadParameterError(f"{model_kind(model)} 模型不支持点号路径: {sorted(nested)}")

    for key, sub_changes in nested.items():
        flat[key] = update_model(getattr(model, key), sub_changes)
    return replace(model, **flat)


def admittance_slopes(model: LoadModel, v_amp: float) -> Tuple[float, float, float, float]:
    """
    i_L(v) = α(V)·v + β(V)·S·v 的系数及其对 V 的导数

    α = P/V²，β = Q/V²，S = [[0, 1], [-1, 0]]。

    Returns:
        (α, β, dα/dV, dβ/dV)，两段式取当前分支
    """
    _require_positive(v_amp)
    active, reactive = load_power(model, v_amp)
    d_active, d_reactive = power_derivatives(model, v_amp)
    v_sq = v_amp * v_amp
    alpha = active / v_sq
    beta = reactive / v_sq
    d_alpha = d_active / v_sq - 2.0 * active / (v_sq * v_amp)
    d_beta = d_reactive / v_sq - 2.0 * reactive / (v_sq * v_amp)
    return alpha, beta, d_alpha, d_beta


def load_jacobian(model: LoadModel, v: DqVector) -> np.ndarray:
    """
    电流函数的完整雅可比 ∂i_L/∂v (2×2)

    J = α·I + (α'/V)·v vᵀ + β·S + (β'/V)·S v vᵀ
    """
    v_sq = _require_regular(v)
    v_amp = math.sqrt(v_sq)
    alpha, beta, d_alpha, d_beta = admittance_slopes(model, v_amp)
    vec = v.as_array()
    s_mat = np.array([[0.0, 1.0], [-1.0, 0.0]])
    outer = np.outer(vec, vec) / v_amp
    return alpha * np.eye(2) + d_alpha * outer + beta * s_mat + d_beta * (s_mat @ outer)


def describe_model(model: LoadModel) -> str:
    """紧凑的参数描述，用于日志和汇总表，如 "zip y_p=0.15 i_p=2 ..." """
    if isinstance(model, TwoTierParams):
        return (f"twotier[{describe_model(model.upper)} | {describe_model(model.z_only)}"
                f" | v_threshold={model.v_threshold:g}]")
    values = " ".join(f"{f.name}={getattr(model, f.name):g}" for f in fields(model))
    return f"{model_kind(model)} {values}"
