#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 5:12 PM
@File       : conftest.py
@Description: table1 参数与公共夹具
"""
import pytest

from config.settings import TABLE1_CONFIG
from core.loads import DqVector, ExpParams, ZipParams
from core.network import LoadNode, Microgrid, PiLine, SourceNode
from core.sim import run_scenario
from services.config_loader import load_config

LINE_R = 0.01273
LINE_L = 0.9337e-3
LINE_C = 12.74e-9


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 长时间积分，可用 -m \"not slow\" 跳过")


@pytest.fixture
def zip_base() -> ZipParams:
    return ZipParams(y_p=0.15, i_p=2.0, p_p=4500.0, y_q=0.05, i_q=9.0, p_q=19000.0)


@pytest.fixture
def zip_only() -> ZipParams:
    return ZipParams(y_p=0.15, y_q=0.05)


@pytest.fixture
def exp_base() -> ExpParams:
    return ExpParams(p0=5500.0, q0=3700.0, n_p=1.7, n_q=0.7, v0=400.0)


@pytest.fixture
def make_chain():
    """电压源 - π 线路 - 负荷 的单链网络"""

    def build(model, c: float = 0.0, c_shunt: float = LINE_C, v_src: float = 400.0) -> Microgrid:
        return Microgrid(
            sources=(SourceNode("src", DqVector(v_src, 0.0)),),
            loads=(LoadNode("load", c, model),),
            lines=(PiLine("line", "src", "load", LINE_R, LINE_L, c_shunt),),
        )

    return build


@pytest.fixture(scope="session")
def table1_doc():
    return load_config(TABLE1_CONFIG)


@pytest.fixture(scope="session")
def table1_run(table1_doc):
    """完整 1.5 s 的 table1 仿真，整个测试会话只跑一次"""
    scenario = table1_doc.to_scenario()
    return scenario, run_scenario(scenario)
