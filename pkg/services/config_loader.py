#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 3:10 PM
@File       : config_loader.py
@Description: JSON 配置解析与校验 (pydantic)
              - grid / scenario / analysis 三个段落，未知字段一律拒绝
              - 数值字段可写成 {"value": 4.5, "unit": "kW"}，解析后统一为 SI
              - 转换为领域对象: Microgrid / Scenario / AnalysisSettings
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, model_validator

from config.settings import (
    NEWTON_MAX, NEWTON_TOL, OMEGA0, SETTLE_TOL, SETTLE_WINDOW, SIM_DT, SIM_RECORD_EVERY,
    WINDOW_BISECT_TOL, WINDOW_GRID_POINTS,
)
from core.exceptions import ConfigError, PassivityError
from core.loads import DqVector, ExpParams, LoadModel, TwoTierParams, ZipParams
from core.network import LoadNode, Microgrid, PiLine, SourceNode, assemble
from core.sim import Integrator, ParameterChange, Scenario
from utils.logger import logger

# 量纲 -> {单位: 换算到 SI 的系数}
UNITS: Dict[str, Dict[str, float]] = {
    "power": {"W": 1.0, "kW": 1e3, "MW": 1e6, "VAr": 1.0, "var": 1.0, "kVAr": 1e3, "kvar": 1e3, "MVAr": 1e6},
    "voltage": {"V": 1.0, "kV": 1e3},
    "current": {"A": 1.0, "kA": 1e3},
    "admittance": {"S": 1.0, "mS": 1e-3},
    "resistance": {"Ohm": 1.0, "mOhm": 1e-3},
    "inductance": {"H": 1.0, "mH": 1e-3, "uH": 1e-6},
    "capacitance": {"F": 1.0, "uF": 1e-6, "nF": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6},
}
ALL_UNITS: Dict[str, float] = {unit: k for table in UNITS.values() for unit, k in table.items()}


def _to_si(dimension: Optional[str]):
    table = UNITS[dimension] if dimension else ALL_UNITS

    def convert(value):
        if not isinstance(value, dict):
            return value
        if set(value) != {"value", "unit"}:
            raise ValueError('带单位的数值必须写成 {"value": x, "unit": "..."}')
        unit, number = value["unit"], value["value"]
        if unit not in table:
            raise ValueError(f"单位 {unit!r} 不适用于{dimension or '该字段'}，可选: {sorted(table)}")
        if isinstance(number, bool) or not isinstance(number, (int, float)):
            raise ValueError(f"数值必须是数字, 实际为 {number!r}")
        return float(number) * table[unit]

    return convert


Power = Annotated[float, BeforeValidator(_to_si("power"))]
Voltage = Annotated[float, BeforeValidator(_to_si("voltage"))]
Current = Annotated[float, BeforeValidator(_to_si("current"))]
Admittance = Annotated[float, BeforeValidator(_to_si("admittance"))]
Resistance = Annotated[float, BeforeValidator(_to_si("resistance"))]
Inductance = Annotated[float, BeforeValidator(_to_si("inductance"))]
Capacitance = Annotated[float, BeforeValidator(_to_si("capacitance"))]
Time = Annotated[float, BeforeValidator(_to_si("time"))]
AnyQuantity = Annotated[float, BeforeValidator(_to_si(None))]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ZipSpec(_Section):
    type: Literal["zip"] = "zip"
    y_p: Admittance = Field(0.0, ge=0)
    i_p: Current = Field(0.0, ge=0)
    p_p: Power = Field(0.0, ge=0)
    y_q: Admittance = Field(0.0, ge=0)
    i_q: Current = Field(0.0, ge=0)
    p_q: Power = Field(0.0, ge=0)

    def to_domain(self) -> ZipParams:
        return ZipParams(self.y_p, self.i_p, self.p_p, self.y_q, self.i_q, self.p_q)


class ExpSpec(_Section):
    type: Literal["exp"] = "exp"
    p0: Power = Field(ge=0)
    q0: Power = Field(ge=0)
    n_p: float = Field(ge=0)
    n_q: float = Field(ge=0)
    v0: Voltage = Field(gt=0)

    def to_domain(self) -> ExpParams:
        return ExpParams(self.p0, self.q0, self.n_p, self.n_q, self.v0)


UpperSpec = Annotated[Union[ZipSpec, ExpSpec], Field(discriminator="type")]


class TwoTierSpec(_Section):
    """v_threshold 缺省时取 0.7·v0 (指数上段可省略 v0)"""
    type: Literal["twotier"] = "twotier"
    upper: UpperSpec
    z_only: Optional[ZipSpec] = None
    v0: Optional[Voltage] = Field(None, gt=0)
    v_threshold: Optional[Voltage] = Field(None, gt=0)

    def to_domain(self) -> TwoTierParams:
        upper = self.upper.to_domain()
        z_only = self.z_only.to_domain() if self.z_only is not None else None
        if self.v_threshold is None:
            return TwoTierParams.from_upper(upper, self.v0, z_only)
        default = TwoTierParams.from_upper(upper, self.v0 or self.v_threshold, z_only)
        return TwoTierParams(upper=upper, z_only=default.z_only, v_threshold=self.v_threshold)


LoadModelSpec = Annotated[Union[ZipSpec, ExpSpec, TwoTierSpec], Field(discriminator="type")]


class SourceSpec(_Section):
    name: str
    v_d: Voltage
    v_q: Voltage = 0.0


class LoadSpec(_Section):
    name: str
    c: Capacitance = Field(0.0, ge=0)
    model: LoadModelSpec


class LineSpec(_Section):
    name: str
    from_node: str = Field(alias="from")
    to: str
    r: Resistance = Field(gt=0)
    l: Inductance = Field(gt=0)
    c_shunt: Capacitance = Field(0.0, ge=0)


class GridSpec(_Section):
    omega0: float = Field(OMEGA0, gt=0)
    sources: List[SourceSpec] = Field(default_factory=list)
    loads: List[LoadSpec] = Field(default_factory=list)
    lines: List[LineSpec] = Field(default_factory=list)


class EventSpec(_Section):
    t: Time = Field(ge=0)
    target: str
    changes: Dict[str, AnyQuantity] = Field(alias="set")


class ScenarioSpec(_Section):
    t_end: Time = Field(ge=0)
    dt: Time = Field(SIM_DT, gt=0)
    integrator: Literal["trapezoidal", "rk4"] = "trapezoidal"
    record_every: int = Field(SIM_RECORD_EVERY, ge=1)
    initial: Literal["nominal", "steady_state"] = "nominal"
    newton_tol: float = Field(NEWTON_TOL, gt=0)
    newton_max: int = Field(NEWTON_MAX, ge=1)
    events: List[EventSpec] = Field(default_factory=list)


class AnalysisSpec(_Section):
    v_min: Voltage = Field(1.0, gt=0)
    v_max: Voltage = Field(1000.0, gt=0)
    grid: int = Field(WINDOW_GRID_POINTS, ge=2)
    tol: Voltage = Field(WINDOW_BISECT_TOL, gt=0)
    monotonicity_samples: int = Field(10000, ge=1)
    seed: int = Field(0, ge=0)
    settle_window: Time = Field(SETTLE_WINDOW, gt=0)
    settle_tol: Voltage = Field(SETTLE_TOL, gt=0)

    @model_validator(mode="after")
    def check_range(self):
        if not self.v_min < self.v_max:
            raise ValueError(f"analysis.v_min ({self.v_min}) 必须小于 v_max ({self.v_max})")
        return self


@dataclass(frozen=True)
class AnalysisSettings:
    v_min: float
    v_max: float
    grid: int
    tol: float
    monotonicity_samples: int
    seed: int
    settle_window: float
    settle_tol: float


class ConfigDocument(_Section):
    grid: GridSpec
    scenario: Optional[ScenarioSpec] = None
    analysis: AnalysisSpec = Field(default_factory=AnalysisSpec)

    def to_grid(self) -> Microgrid:
        """构造网络并做拓扑校验 (端点、重名、节点电容)"""
        try:
            grid = Microgrid(
                sources=tuple(SourceNode(s.name, DqVector(s.v_d, s.v_q)) for s in self.grid.sources),
                loads=tuple(LoadNode(n.name, n.c, n.model.to_domain()) for n in self.grid.loads),
                lines=tuple(PiLine(ln.name, ln.from_node, ln.to, ln.r, ln.l, ln.c_shunt) for ln in self.grid.lines),
                omega0=self.grid.omega0,
            )
            assemble(grid)
        except PassivityError as exc:
            raise ConfigError(f"grid 段无效: {exc}") from exc
        return grid

    def load_models(self) -> Dict[str, LoadModel]:
        return {node.name: node.model for node in self.to_grid().loads}

    def to_scenario(self) -> Scenario:
        if self.scenario is None:
            raise ConfigError("配置缺少 scenario 段")
        spec = self.scenario
        try:
            return Scenario(
                grid=self.to_grid(),
                t_end=spec.t_end,
                events=[ParameterChange(e.t, e.target, dict(e.changes)) for e in spec.events],
                integrator=Integrator(spec.integrator),
                dt=spec.dt,
                record_every=spec.record_every,
                initial=spec.initial,
                newton_tol=spec.newton_tol,
                newton_max=spec.newton_max,
            )
        except (PassivityError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"scenario 段无效: {exc}") from exc

    def to_analysis(self) -> AnalysisSettings:
        a = self.analysis
        return AnalysisSettings(a.v_min, a.v_max, a.grid, a.tol, a.monotonicity_samples,
                                a.seed, a.settle_window, a.settle_tol)


def parse_config(text: str, source: str = "<string>") -> ConfigDocument:
    """
    解析配置文本

    Raises:
        ConfigError: JSON 语法错误 (带行列号)、schema 校验失败或网络拓扑无效
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        logger.error(f"❌ [配置] {source} 第 {exc.lineno} 行第 {exc.colno} 列: {exc.msg}")
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: JSON 语法错误: {exc.msg}",
                          line=exc.lineno, column=exc.colno) from exc
    try:
        doc = ConfigDocument.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        logger.error(f"❌ [配置] {source} 校验失败: {problems}")
        raise ConfigError(f"{source}: 配置校验失败: {problems}") from exc
    try:
        doc.to_grid()
    except ConfigError as exc:
        logger.error(f"❌ [配置] {source} 拓扑无效: {exc}")
        raise ConfigError(f"{source}: {exc}") from exc
    return doc


def load_config(path: Union[str, Path]) -> ConfigDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"无法读取配置文件 {path}: {exc}") from exc
    doc = parse_config(text, source=str(path))
    logger.info(f"📄 [配置] 已加载 {path.name}: 负荷 {len(doc.grid.loads)} 个, 线路 {len(doc.grid.lines)} 条")
    return doc


def dump_config(doc: ConfigDocument, path: Union[str, Path, None] = None) -> str:
    """序列化为 JSON (全部为 SI 数值)，给出 path 时同时写文件"""
    text = json.dumps(doc.model_dump(by_alias=True, exclude_none=True), indent=2, ensure_ascii=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
