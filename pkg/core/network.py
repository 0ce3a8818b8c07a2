#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 11:20 AM
@File       : network.py
@Description: 端口哈密顿网络模型
              - 元件: 理想电压源 / 负荷节点 / π 型线路
              - 二分图拼装 (节点 <-> 线路)，状态排序: 先线路磁链，后负荷电荷
              - 稳态求解 (阻尼牛顿)、误差哈密顿量、功率平衡核算
"""
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from networkx.algorithms import bipartite

from config.settings import OMEGA0, STEADY_STATE_MAX_ITER, STEADY_STATE_TOL
from core.exceptions import AssemblyError, SingularityError, StepFailure
from core.loads import (
    DqVector, ExpParams, LoadModel, TwoTierParams, load_current, load_jacobian,
)
from utils.logger import logger

# [[0, 1], [-1, 0]]，dq 坐标系中的 90° 耦合
S_MAT = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class SourceNode:
    """理想电压源 (零内阻)，吸收任意电流"""
    name: str
    v_fixed: DqVector

    def __post_init__(self):
        if not self.v_fixed.amplitude() > 0:
            raise AssemblyError(f"电压源 {self.name} 的幅值必须为正")


@dataclass(frozen=True)
class LoadNode:
    """
    负荷节点

    Attributes:
        name: 节点名
        c: 节点自身电容 (F)，相邻线路的并联电容在拼装时再叠加
        model: 静态负荷模型
    """
    name: str
    c: float
    model: LoadModel

    def __post_init__(self):
        if not math.isfinite(self.c) or self.c < 0:
            raise AssemblyError(f"负荷节点 {self.name} 的电容不能为负, 实际为 {self.c}")


@dataclass(frozen=True)
class PiLine:
    """
    π 型线路: 串联 R-L，两端各 c_shunt 并联电容

    Attributes:
        from_node / to_node: 端点节点名，电流正方向 from -> to
        r: 电阻 (Ω)
        l: 电感 (H)
        c_shunt: 每端并联电容 (F)
    """
    name: str
    from_node: str
    to_node: str
    r: float
    l: float
    c_shunt: float = 0.0

    def __post_init__(self):
        if not self.r > 0 or not self.l > 0:
            raise AssemblyError(f"线路 {self.name} 的 R、L 必须为正 (R={self.r}, L={self.l})")
        if not math.isfinite(self.c_shunt) or self.c_shunt < 0:
            raise AssemblyError(f"线路 {self.name} 的并联电容不能为负, 实际为 {self.c_shunt}")

    def reactance(self, omega0: float) -> float:
        return omega0 * self.l


@dataclass(frozen=True)
class Microgrid:
    sources: Tuple[SourceNode, ...] = ()
    loads: Tuple[LoadNode, ...] = ()
    lines: Tuple[PiLine, ...] = ()
    omega0: float = OMEGA0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "loads", tuple(self.loads))
        object.__setattr__(self, "lines", tuple(self.lines))

    def load(self, name: str) -> LoadNode:
        for node in self.loads:
            if node.name == name:
                return node
        raise KeyError(name)

    def effective_capacitance(self, name: str) -> float:
        """节点电容加上所有相邻线路的并联电容 (只叠加一次)"""
        node = self.load(name)
        shunt = sum(line.c_shunt for line in self.lines if name in (line.from_node, line.to_node))
        return node.c + shunt

    def with_load_model(self, name: str, model: LoadModel) -> "Microgrid":
        self.load(name)
        loads = tuple(replace(node, model=model) if node.name == name else node for node in self.loads)
        return replace(self, loads=loads)

    def islands(self) -> List["Microgrid"]:
        """
        去掉理想电压源后的各连通分量 (理想源两侧动态互不影响)

        按状态排序中的首个元件排列；每个子网只带与其线路相连的电压源。
        """
        g = self.graph()
        g.remove_nodes_from(s.name for s in self.sources)
        order = {name: k for k, name in enumerate([ln.name for ln in self.lines] + [n.name for n in self.loads])}
        components = sorted(nx.connected_components(g), key=lambda comp: min(order[name] for name in comp))
        result = []
        for comp in components:
            lines = tuple(ln for ln in self.lines if ln.name in comp)
            ends = {ln.from_node for ln in lines} | {ln.to_node for ln in lines}
            result.append(Microgrid(
                sources=tuple(s for s in self.sources if s.name in ends),
                loads=tuple(n for n in self.loads if n.name in comp),
                lines=lines,
                omega0=self.omega0,
            ))
        return result

    def graph(self) -> nx.Graph:
        """
        节点与线路构成的二分图

        节点侧 bipartite=0 (kind 为 source / load)，线路侧 bipartite=1，
        每条线路连接其两个端点。
        """
        g = nx.Graph()
        g.add_nodes_from((s.name for s in self.sources), bipartite=0, kind="source")
        g.add_nodes_from((n.name for n in self.loads), bipartite=0, kind="load")
        for line in self.lines:
            g.add_node(line.name, bipartite=1, kind="line")
            g.add_edge(line.name, line.from_node, role="from")
            g.add_edge(line.name, line.to_node, role="to")
        return g


@dataclass(frozen=True)
class PowerBalance:
    """各部分功率 (W)，source_injection = load_exchange + line_losses + line_storage_rate"""
    source_injection: float
    load_exchange: float
    line_losses: float
    line_storage_rate: float

    @property
    def residual(self) -> float:
        return self.source_injection - self.load_exchange - self.line_losses - self.line_storage_rate


@dataclass(frozen=True)
class ErrorState:
    """相对参考稳态 x* 的偏差 x - x*"""
    reference: np.ndarray
    deviation: np.ndarray

    def hamiltonian(self, weights: np.ndarray) -> float:
        """Σ w·Δ²，weights 为各状态分量的 1/2L 或 1/2C"""
        return float(np.sum(weights * self.deviation * self.deviation))


def load_node_rhs(node: LoadNode, charge: DqVector, i_exchange: DqVector,
                  omega0: float = OMEGA0, c_eff: Optional[float] = None) -> DqVector:
    """
    负荷节点电荷导数 dx/dt = J_L·v - i_L(v) + i_exchange，v = x/C

    Args:
        c_eff: 有效电容，缺省取 node.c
    """
    cap = node.c if c_eff is None else c_eff
    if not cap > 0:
        raise AssemblyError(f"负荷节点 {node.name} 的有效电容必须为正")
    v = DqVector(charge.d / cap, charge.q / cap)
    i_load = load_current(node.model, v)
    return DqVector(omega0 * cap * v.q - i_load.d + i_exchange.d,
                    -omega0 * cap * v.d - i_load.q + i_exchange.q)


def line_rhs(line: PiLine, flux: DqVector, v_from: DqVector, v_to: DqVector,
             omega0: float = OMEGA0) -> DqVector:
    """线路磁链导数 dφ/dt = -R·i + ω0·L·S·i + v_from - v_to，i = φ/L"""
    i_d, i_q = flux.d / line.l, flux.q / line.l
    x = omega0 * line.l
    return DqVector(-line.r * i_d + x * i_q + v_from.d - v_to.d,
                    -line.r * i_q - x * i_d + v_from.q - v_to.q)


def line_steady_state(line: PiLine, v_from: DqVector, v_to: DqVector,
                      omega0: float = OMEGA0) -> DqVector:
    """i* = 1/(R² + X²)·[[R, X], [-X, R]]·(v_from - v_to)"""
    x = line.reactance(omega0)
    denom = line.r ** 2 + x ** 2
    dv = v_from - v_to
    return DqVector((line.r * dv.d + x * dv.q) / denom, (-x * dv.d + line.r * dv.q) / denom)


def _nominal_voltage(model: LoadModel, fallback: Optional[float]) -> float:
    if isinstance(model, ExpParams):
        return model.v0
    if isinstance(model, TwoTierParams) and isinstance(model.upper, ExpParams):
        return model.upper.v0
    if fallback is None:
        raise AssemblyError("ZIP 负荷没有额定电压且网络中没有电压源，无法确定初始电压")
    return fallback


@dataclass
class AssembledSystem:
    """
    拼装后的状态空间系统

    状态向量 = [各线路磁链 (d, q) ..., 各负荷电荷 (d, q) ...]，index 给出每个元件的切片。
    """
    grid: Microgrid
    index: Dict[str, slice]
    line_names: List[str]
    load_names: List[str]
    capacitance: np.ndarray
    # 以下为向量化所需的关联矩阵，行=线路，列=负荷
    from_load: np.ndarray = field(repr=False)
    to_load: np.ndarray = field(repr=False)
    source_from: np.ndarray = field(repr=False)
    source_to: np.ndarray = field(repr=False)
    resistance: np.ndarray = field(repr=False)
    inductance: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return 2 * (len(self.line_names) + len(self.load_names))

    @property
    def n_lines(self) -> int:
        return len(self.line_names)

    @property
    def models(self) -> List[LoadModel]:
        return [node.model for node in self.grid.loads]

    def _check_dim(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        if state.shape != (self.dim,):
            raise AssemblyError(f"状态维度不符: 期望 ({self.dim},)，实际 {state.shape}")
        return state

    def split(self, state: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """返回 (线路磁链 (n_l, 2), 负荷电荷 (n_n, 2))"""
        state = self._check_dim(state)
        n2 = 2 * self.n_lines
        return state[:n2].reshape(-1, 2), state[n2:].reshape(-1, 2)

    def line_currents(self, state: np.ndarray) -> np.ndarray:
        flux, _ = self.split(state)
        return flux / self.inductance[:, None]

    def load_voltages(self, state: np.ndarray) -> np.ndarray:
        _, charge = self.split(state)
        return charge / self.capacitance[:, None]

    def load_amplitudes(self, state: np.ndarray) -> np.ndarray:
        return np.hypot(*self.load_voltages(state).T)

    def co_energy(self, state: np.ndarray) -> np.ndarray:
        """协能量变量: 线路电流 (A) 与节点电压 (V)，与状态同序"""
        return np.concatenate([self.line_currents(state).ravel(), self.load_voltages(state).ravel()])

    def from_co_energy(self, values: np.ndarray) -> np.ndarray:
        values = self._check_dim(values)
        n2 = 2 * self.n_lines
        flux = values[:n2].reshape(-1, 2) * self.inductance[:, None]
        charge = values[n2:].reshape(-1, 2) * self.capacitance[:, None]
        return np.concatenate([flux.ravel(), charge.ravel()])

    def state_scale(self) -> np.ndarray:
        """每个状态分量 1 A / 1 V 对应的量级 (L·1A, C·1V)，用于残差归一化"""
        return np.concatenate([np.repeat(self.inductance, 2), np.repeat(self.capacitance, 2)])

    def terminal_voltages(self, voltages: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        v_from = self.from_load @ voltages + self.source_from
        v_to = self.to_load @ voltages + self.source_to
        return v_from, v_to

    def exchange_currents(self, currents: np.ndarray) -> np.ndarray:
        """i_exchange = Σ 流入线路电流 - Σ 流出线路电流"""
        return self.to_load.T @ currents - self.from_load.T @ currents

    def load_currents(self, voltages: np.ndarray) -> np.ndarray:
        out = np.empty_like(voltages)
        for k, model in enumerate(self.models):
            i_load = load_current(model, DqVector(voltages[k, 0], voltages[k, 1]))
            out[k, 0], out[k, 1] = i_load.d, i_load.q
        return out

    def _co_energy_residual(self, currents: np.ndarray, voltages: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        omega0 = self.grid.omega0
        v_from, v_to = self.terminal_voltages(voltages)
        x = omega0 * self.inductance[:, None]
        line_part = -self.resistance[:, None] * currents + x * (currents @ S_MAT.T) + v_from - v_to
        rot = omega0 * self.capacitance[:, None] * (voltages @ S_MAT.T)
        load_part = rot - self.load_currents(voltages) + self.exchange_currents(currents)
        return line_part, load_part

    def rhs(self, state: np.ndarray) -> np.ndarray:
        """状态导数 (磁链导数 V，电荷导数 A)"""
        line_part, load_part = self._co_energy_residual(self.line_currents(state), self.load_voltages(state))
        return np.concatenate([line_part.ravel(), load_part.ravel()])

    __call__ = rhs

    def co_energy_jacobian(self, co: np.ndarray) -> np.ndarray:
        """rhs 对协能量变量 (电流, 电压) 的解析雅可比"""
        co = self._check_dim(co)
        n2 = 2 * self.n_lines
        voltages = co[n2:].reshape(-1, 2)
        omega0 = self.grid.omega0
        jac = np.zeros((self.dim, self.dim))
        incidence = self.to_load - self.from_load
        eye = np.eye(2)
        for j in range(self.n_lines):
            rows = slice(2 * j, 2 * j + 2)
            jac[rows, rows] = -self.resistance[j] * eye + omega0 * self.inductance[j] * S_MAT
            for k in range(len(self.load_names)):
                if incidence[j, k]:
                    cols = slice(n2 + 2 * k, n2 + 2 * k + 2)
                    # v_from 取正，v_to 取负
                    jac[rows, cols] = -incidence[j, k] * eye
                    jac[cols, rows] = incidence[j, k] * eye
        for k, model in enumerate(self.models):
            block = slice(n2 + 2 * k, n2 + 2 * k + 2)
            v = DqVector(voltages[k, 0], voltages[k, 1])
            jac[block, block] = omega0 * self.capacitance[k] * S_MAT - load_jacobian(model, v)
        return jac

    def error_hamiltonian(self, state: np.ndarray, reference: np.ndarray) -> float:
        """Σ ‖Δφ‖²/2L + Σ ‖Δx‖²/2C (J)"""
        return self.error_state(state, reference).hamiltonian(0.5 / self.state_scale())

    def error_state(self, state: np.ndarray, reference: np.ndarray) -> ErrorState:
        state = self._check_dim(state)
        reference = self._check_dim(reference)
        return ErrorState(reference=reference.copy(), deviation=state - reference)

    def initial_state(self, mode: str = "nominal") -> np.ndarray:
        """
        初始状态

        Args:
            mode: "nominal" -> 负荷电压取 (V_nom, 0)，线路取平衡各负荷电流的最小范数电流；
                  "steady_state" -> 以 nominal 为初值求解 rhs = 0
        """
        if mode not in ("nominal", "steady_state"):
            raise ValueError(f"未知初始状态模式: {mode}")
        fallback = self.grid.sources[0].v_fixed.amplitude() if self.grid.sources else None
        voltages = np.array([[_nominal_voltage(node.model, fallback), 0.0] for node in self.grid.loads]).reshape(-1, 2)
        currents = np.zeros((self.n_lines, 2))
        if self.n_lines and len(self.load_names):
            incidence = (self.to_load - self.from_load).T
            target = self.load_currents(voltages)
            currents = np.linalg.lstsq(incidence, target, rcond=None)[0]
        state = self.from_co_energy(np.concatenate([currents.ravel(), voltages.ravel()]))
        if mode == "steady_state":
            return solve_steady_state(self, state)
        return state

    def power_balance(self, state: np.ndarray) -> PowerBalance:
        """
        功率核算

        电源注入 = 负荷交换功率 + 线路电阻损耗 + 线路储能变化率
        """
        currents = self.line_currents(state)
        voltages = self.load_voltages(state)
        injection = 0.0
        for j in range(self.n_lines):
            injection += float(self.source_from[j] @ currents[j]) - float(self.source_to[j] @ currents[j])
        exchange = float(np.sum(voltages * self.exchange_currents(currents)))
        losses = float(np.sum(self.resistance[:, None] * currents * currents))
        line_part, _ = self._co_energy_residual(currents, voltages)
        storage = float(np.sum(currents * line_part))
        return PowerBalance(injection, exchange, losses, storage)


def assemble(grid: Microgrid) -> AssembledSystem:
    """
    把 Microgrid 拼装为状态空间右端函数

    Raises:
        AssemblyError: 重名、线路端点不存在、自环、有效电容为零
    """
    names = [s.name for s in grid.sources] + [n.name for n in grid.loads] + [ln.name for ln in grid.lines]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise AssemblyError(f"元件重名: {duplicates}")

    sources = {s.name: s for s in grid.sources}
    load_pos = {n.name: k for k, n in enumerate(grid.loads)}
    for line in grid.lines:
        for end in (line.from_node, line.to_node):
            if end not in sources and end not in load_pos:
                raise AssemblyError(f"线路 {line.name} 的端点 {end} 不存在")
        if line.from_node == line.to_node:
            raise AssemblyError(f"线路 {line.name} 两端为同一节点 {line.from_node}")

    g = grid.graph()
    bus_nodes = [s.name for s in grid.sources] + [n.name for n in grid.loads]
    if g.number_of_edges() and not bipartite.is_bipartite_node_set(g, bus_nodes):
        raise AssemblyError("节点/线路不构成二分图")

    capacitance = np.array([grid.effective_capacitance(n.name) for n in grid.loads], dtype=float)
    for node, cap in zip(grid.loads, capacitance):
        if not cap > 0:
            raise AssemblyError(f"负荷节点 {node.name} 的总电容为零 (自身电容与相邻线路并联电容之和)")

    n_l, n_n = len(grid.lines), len(grid.loads)
    from_load = np.zeros((n_l, n_n))
    to_load = np.zeros((n_l, n_n))
    source_from = np.zeros((n_l, 2))
    source_to = np.zeros((n_l, 2))
    for j, line in enumerate(grid.lines):
        if line.from_node in load_pos:
            from_load[j, load_pos[line.from_node]] = 1.0
        else:
            source_from[j] = sources[line.from_node].v_fixed.as_array()
        if line.to_node in load_pos:
            to_load[j, load_pos[line.to_node]] = 1.0
        else:
            source_to[j] = sources[line.to_node].v_fixed.as_array()

    index: Dict[str, slice] = {}
    offset = 0
    for line in grid.lines:
        index[line.name] = slice(offset, offset + 2)
        offset += 2
    for node in grid.loads:
        index[node.name] = slice(offset, offset + 2)
        offset += 2

    return AssembledSystem(
        grid=grid,
        index=index,
        line_names=[ln.name for ln in grid.lines],
        load_names=[n.name for n in grid.loads],
        capacitance=capacitance,
        from_load=from_load,
        to_load=to_load,
        source_from=source_from,
        source_to=source_to,
        resistance=np.array([ln.r for ln in grid.lines], dtype=float),
        inductance=np.array([ln.l for ln in grid.lines], dtype=float),
    )


def error_hamiltonian(grid: Microgrid, state: np.ndarray, reference: np.ndarray) -> float:
    return assemble(grid).error_hamiltonian(state, reference)


def solve_steady_state(system: AssembledSystem, seed: Optional[np.ndarray] = None,
                       tol: float = STEADY_STATE_TOL, max_iter: int = STEADY_STATE_MAX_ITER) -> np.ndarray:
    """
    阻尼牛顿法求解 rhs(x) = 0

    在协能量变量上迭代 (解析雅可比)，残差不下降时步长减半。

    Args:
        system: 拼装后的系统
        seed: 初值状态，缺省为 nominal 初始状态
        tol: 残差无穷范数上限 (SI)

    Returns:
        稳态状态向量

    Raises:
        StepFailure: 迭代不收敛或雅可比奇异
    """
    if system.dim == 0:
        return np.zeros(0)
    state = system.initial_state("nominal") if seed is None else np.asarray(seed, dtype=float)
    co = system.co_energy(state)

    def residual(values: np.ndarray) -> np.ndarray:
        return system.rhs(system.from_co_energy(values))

    f = residual(co)
    norm = float(np.max(np.abs(f)))
    for iteration in range(max_iter):
        if norm <= tol:
            return system.from_co_energy(co)
        try:
            delta = np.linalg.solve(system.co_energy_jacobian(co), -f)
        except np.linalg.LinAlgError as exc:
            raise StepFailure(f"稳态求解雅可比奇异: {exc}", iterations=iteration, residual=norm) from exc
        step = 1.0
        while True:
            trial = co + step * delta
            try:
                f_trial = residual(trial)
                trial_norm = float(np.max(np.abs(f_trial)))
            except SingularityError:
                trial_norm = math.inf
            if trial_norm < norm or step < 1e-6:
                break
            step *= 0.5
        if not math.isfinite(trial_norm):
            raise StepFailure("稳态求解进入奇异区域 (电压幅值趋于零)", iterations=iteration, residual=norm)
        co, f, norm = trial, f_trial, trial_norm

    if norm <= tol:
        return system.from_co_energy(co)
    logger.warning(f"⚠️ [稳态] 牛顿迭代 {max_iter} 次未收敛, 残差 {norm:.3e}")
    raise StepFailure(f"稳态求解未收敛 (残差 {norm:.3e})", iterations=max_iter, residual=norm)
