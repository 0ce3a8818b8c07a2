#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 6:40 PM
@File       : test_sim.py
@Description: 积分器、分段仿真、稳态判定、能量单调性、内置 table1 场景
"""
import math
from types import SimpleNamespace

import numpy as np
import pytest

from config.settings import OMEGA0
from core.exceptions import AssemblyError, DivergenceError, LoadParameterError, StepFailure
from core.loads import DqVector, ZipParams
from core.network import LoadNode, Microgrid, PiLine, SourceNode, assemble, solve_steady_state
from core.passivity import Verdict
from core.sim import (
    STABILITY_BY_STATUS, Integrator, ParameterChange, Scenario, SegmentStatus, TrapezoidalIntegrator,
    detect_steady_state, energy_nonincreasing, run_scenario, segment_status, segment_summary, step_rk4,
    step_trapezoidal,
)

TABLE1_HEADER = ("t,line_zip.d,line_zip.q,line_exp.d,line_exp.q,zip.d,zip.q,exp.d,exp.q,"
                 "Vamp.zip,Vamp.exp,H_err")


class TestRk4:
    def test_zero_rhs(self):
        x = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(step_rk4(lambda s: np.zeros_like(s), x, 0.1), x)

    def test_scalar_decay(self):
        y = step_rk4(lambda s: -s, np.array([1.0]), 0.1)
        assert abs(y[0] - math.exp(-0.1)) <= 1e-7

    def test_lossless_rotation(self):
        # 无线路、零电流负荷的节点只在 dq 坐标系中旋转
        system = assemble(Microgrid(loads=(LoadNode("n", 1e-6, ZipParams()),)))
        state = np.array([1e-6 * 400.0, 0.0])
        dt = 1e-6
        for _ in range(round(2 * math.pi / OMEGA0 / dt)):
            state = step_rk4(system.rhs, state, dt)
        assert system.load_amplitudes(state)[0] == pytest.approx(400.0, rel=1e-8)

    def test_invalid_step(self):
        with pytest.raises(ValueError):
            step_rk4(lambda s: s, np.array([1.0]), 0.0)

    def test_non_finite(self):
        with pytest.raises(DivergenceError):
            step_rk4(lambda s: s * np.inf, np.array([1.0]), 0.1)


class TestTrapezoidal:
    def test_fixed_point(self):
        integrator = TrapezoidalIntegrator(lambda s: np.zeros_like(s))
        x = np.array([3.0, 4.0])
        np.testing.assert_array_equal(integrator.step(x, 1e-3), x)
        assert integrator.last_iterations == 0

    def test_a_stable(self):
        a = np.array([[-1e6, 50.0], [-50.0, -2.0]])
        x = np.array([1.0, 1.0])
        norms = [np.linalg.norm(x)]
        integrator = TrapezoidalIntegrator(lambda s: a @ s)
        for _ in range(50):
            x = integrator.step(x, 1e-2)
            norms.append(np.linalg.norm(x))
        assert all(b <= a_ + 1e-12 for a_, b in zip(norms, norms[1:]))

    def test_single_step_helper(self):
        y = step_trapezoidal(lambda s: -s, np.array([1.0]), 0.1)
        assert y[0] == pytest.approx((1 - 0.05) / (1 + 0.05), rel=1e-7)

    def test_newton_failure(self):
        # y - x - h/2·(f(x) + f(y)) = 0 无实根
        with pytest.raises(StepFailure) as info:
            step_trapezoidal(lambda s: s ** 2 + 1.0, np.array([2.0]), 1.0)
        assert info.value.iterations > 0

    def test_stiff_chain_reaches_equilibrium(self, make_chain, zip_only):
        grid = make_chain(zip_only)
        trace = run_scenario(Scenario(grid=grid, t_end=0.02, dt=1e-5, record_every=100))
        system = assemble(grid)
        expected = system.load_amplitudes(solve_steady_state(system))[0]
        assert not trace.truncated
        assert trace.amplitude("load")[-1] == pytest.approx(expected, abs=1e-3)


class TestScenario:
    def test_validation(self, make_chain, zip_base):
        grid = make_chain(zip_base)
        with pytest.raises(AssemblyError):
            Scenario(grid=grid, t_end=1.0, events=[ParameterChange(0.5, "line", {"y_p": 0.1})])
        with pytest.raises(ValueError):
            Scenario(grid=grid, t_end=1.0, events=[ParameterChange(1.5, "load", {"y_p": 0.1})])
        with pytest.raises(LoadParameterError):
            Scenario(grid=grid, t_end=1.0, events=[ParameterChange(0.5, "load", {"n_p": 1.1})])
        with pytest.raises(ValueError):
            Scenario(grid=grid, t_end=1.0, dt=0.0)

    def test_events_sorted(self, make_chain, zip_base):
        s = Scenario(grid=make_chain(zip_base), t_end=1.0, events=[
            ParameterChange(0.6, "load", {"p_q": 11000.0}),
            ParameterChange(0.5, "load", {"y_p": 0.1}),
        ])
        assert [e.t for e in s.events] == [0.5, 0.6]
        assert s.integrator is Integrator.TRAPEZOIDAL

    def test_zero_horizon(self, make_chain, zip_base):
        trace = run_scenario(Scenario(grid=make_chain(zip_base), t_end=0.0))
        assert len(trace.times) == 1
        assert trace.times[0] == 0.0
        assert trace.amplitude("load")[0] == pytest.approx(400.0)
        assert trace.h_err[0] >= 0.0

    def test_event_rows_and_segments(self, make_chain, zip_base):
        s = Scenario(grid=make_chain(zip_base), t_end=0.004, dt=1e-5, record_every=7,
                     events=[ParameterChange(0.001, "load", {"y_p": 0.2})])
        trace = run_scenario(s)
        assert np.all(np.diff(trace.times) > 0)
        assert 0.001 in trace.times
        assert trace.times[-1] == 0.004
        first, second = trace.segments
        assert first.models["load"].y_p == 0.15
        assert second.models["load"].y_p == 0.2
        assert trace.times[first.rows[-1]] == 0.001
        assert trace.times[second.rows[0]] > 0.001
        system = assemble(s.grid)
        state = system.from_co_energy(trace.values[first.rows[-1]])
        assert second.h_start == pytest.approx(system.error_hamiltonian(state, second.reference), rel=1e-9)

    def test_deterministic(self, make_chain, zip_base):
        s = Scenario(grid=make_chain(zip_base), t_end=0.003, dt=1e-5, record_every=5,
                     events=[ParameterChange(0.001, "load", {"p_q": 11000.0})])
        a, b = run_scenario(s), run_scenario(s)
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.h_err, b.h_err)


class TestDivergence:
    @pytest.fixture
    def two_islands(self, zip_base):
        src = SourceNode("src", DqVector(400.0, 0.0))
        return Microgrid(
            sources=(src,),
            loads=(LoadNode("stiff", 0.0, zip_base), LoadNode("slow", 1e-3, zip_base)),
            lines=(PiLine("l1", "src", "stiff", 0.01273, 0.9337e-3, 12.74e-9),
                   PiLine("l2", "src", "slow", 0.01273, 0.9337e-3, 12.74e-9)),
        )

    def test_explicit_step_too_large_truncates_island(self, two_islands):
        s = Scenario(grid=two_islands, t_end=0.01, dt=1e-5, record_every=10, integrator="rk4",
                     events=[ParameterChange(0.005, "stiff", {"y_p": 0.2})])
        trace = run_scenario(s)
        stiff = trace.segments_for("stiff")
        assert stiff[0].status is SegmentStatus.UNSTABLE
        assert stiff[0].t_stop is not None and stiff[0].t_stop < 0.005
        assert stiff[1].status is SegmentStatus.NOT_REACHED
        assert stiff[1].models["stiff"].y_p == 0.2
        assert trace.truncated

        # 另一个子网照常积分到终点
        assert trace.times[-1] == 0.01
        assert np.isnan(trace.amplitude("stiff")[-1])
        assert np.isfinite(trace.amplitude("slow")).all()
        assert np.isnan(trace.h_err[-1])
        assert all(seg.status is SegmentStatus.COMPLETED for seg in trace.segments_for("slow"))

        settled = dict(zip([id(seg) for seg in trace.segments], detect_steady_state(trace, 0.002, 0.5)))
        assert settled[id(stiff[0])] is False
        assert settled[id(stiff[1])] is None

        rows = {(r.load, r.segment): r for r in segment_summary(trace, s, 0.002, 0.5, grid=200)}
        assert rows[("stiff", stiff[0].index)].stability == "unstable"
        assert rows[("stiff", stiff[1].index)].stability == "n/a"
        assert rows[("slow", trace.segments_for("slow")[0].index)].stability in ("stable", "undetermined")


class TestSteadyStateAndEnergy:
    def test_constant_trace_settled(self, make_chain, zip_base):
        s = Scenario(grid=make_chain(zip_base), t_end=0.01, dt=1e-5, record_every=10, initial="steady_state")
        trace = run_scenario(s)
        assert detect_steady_state(trace, 0.005, 1e-6) == [True]
        assert np.max(trace.h_err) < 1e-12

    def test_energy_decreases_on_passive_chain(self, make_chain, zip_only):
        trace = run_scenario(Scenario(grid=make_chain(zip_only), t_end=0.01, dt=1e-5, record_every=10))
        segment = trace.segments[0]
        assert energy_nonincreasing(trace, segment) is True
        assert segment.energies[-1] < 1e-3 * segment.h_start

    def test_energy_check_needs_certificate(self, make_chain):
        # y_p = 0 时处处不满足条件，检查不适用
        model = ZipParams(i_p=2.0, p_p=4500.0, y_q=0.05, i_q=9.0, p_q=19000.0)
        trace = run_scenario(Scenario(grid=make_chain(model, c=1e-6), t_end=0.001, dt=1e-5, record_every=10))
        assert energy_nonincreasing(trace, trace.segments[0]) is None

    def test_summary_rows(self, make_chain, zip_base):
        s = Scenario(grid=make_chain(zip_base), t_end=0.02, dt=1e-5, record_every=10,
                     events=[ParameterChange(0.01, "load", {"y_p": 0.2})])
        rows = segment_summary(run_scenario(s), s, 0.002, 0.5, grid=500)
        assert [r.segment for r in rows] == [0, 1]
        assert rows[0].verdict == Verdict.STRICTLY_PASSIVE.value
        assert rows[0].window_lo < rows[0].v_operating < rows[0].window_hi
        assert rows[0].parameters.startswith("zip y_p=0.15")
        assert rows[1].parameters.startswith("zip y_p=0.2")
        assert rows[1].status == "settled" and rows[1].stability == "stable"

    @pytest.mark.parametrize("status, settled, expected", [
        (SegmentStatus.COMPLETED, True, ("settled", "stable")),
        (SegmentStatus.COMPLETED, False, ("not_settled", "undetermined")),
        (SegmentStatus.COMPLETED, None, ("no_samples", "n/a")),
        (SegmentStatus.UNSTABLE, False, ("unstable", "unstable")),
        (SegmentStatus.STEP_FAILURE, False, ("step_failure", "unstable")),
        (SegmentStatus.NOT_REACHED, None, ("not_reached", "n/a")),
    ])
    def test_status_to_stability(self, status, settled, expected):
        label = segment_status(SimpleNamespace(status=status), settled)
        assert (label, STABILITY_BY_STATUS.get(label, "n/a")) == expected


class TestIntegratorCrossCheck:
    def test_rk4_small_step_matches_trapezoidal(self, make_chain, zip_base):
        grid = make_chain(zip_base)
        explicit = run_scenario(Scenario(grid=grid, t_end=5e-4, dt=1e-8, record_every=10000, integrator="rk4"))
        implicit = run_scenario(Scenario(grid=grid, t_end=5e-4, dt=1e-5, record_every=10))
        assert len(explicit.times) == len(implicit.times) == 6
        np.testing.assert_allclose(explicit.amplitude("load"), implicit.amplitude("load"), atol=0.1)

    @pytest.mark.slow
    def test_rk4_matches_trapezoidal_over_20ms(self, make_chain, zip_base):
        grid = make_chain(zip_base)
        explicit = run_scenario(Scenario(grid=grid, t_end=0.02, dt=1e-8, record_every=10000, integrator="rk4"))
        implicit = run_scenario(Scenario(grid=grid, t_end=0.02, dt=1e-5, record_every=10))
        assert len(explicit.times) == len(implicit.times) == 201
        np.testing.assert_allclose(explicit.times, implicit.times, atol=1e-9)
        assert all(seg.status is SegmentStatus.COMPLETED for seg in explicit.segments + implicit.segments)
        np.testing.assert_allclose(explicit.amplitude("load"), implicit.amplitude("load"), atol=0.1)


class TestTable1:
    def test_header(self, table1_run):
        _, trace = table1_run
        assert ",".join(trace.to_dataframe().columns) == TABLE1_HEADER

    def test_base_segments_settle(self, table1_run):
        scenario, trace = table1_run
        verdicts = dict(zip([id(seg) for seg in trace.segments], detect_steady_state(trace, 0.05, 0.5)))
        for load in ("zip", "exp"):
            base = trace.segments_for(load)[0]
            assert base.t_start == 0.0 and base.t_end == 0.5
            assert base.status is SegmentStatus.COMPLETED
            assert verdicts[id(base)] is True

    def test_operating_points(self, table1_run):
        _, trace = table1_run
        zip_base, zip_change = trace.segments_for("zip")[:2]
        assert 373.0 < zip_base.operating_amplitudes["zip"] < 380.0
        exp_base = trace.segments_for("exp")[0]
        assert 390.0 < exp_base.operating_amplitudes["exp"] < 400.0
        assert zip_change.t_start == 0.5
        assert zip_change.models["zip"].y_p == 0.1

    def test_verdicts_consistent_with_certificates(self, table1_run):
        scenario, trace = table1_run
        rows = segment_summary(trace, scenario, 0.05, 0.5, v_range=(1.0, 1000.0), grid=2000)
        by_key = {(r.load, r.segment): r for r in rows}

        base = by_key[("zip", trace.segments_for("zip")[0].index)]
        assert base.verdict == Verdict.STRICTLY_PASSIVE.value and base.stability == "stable"
        change = by_key[("zip", trace.segments_for("zip")[1].index)]
        assert change.verdict == Verdict.VIOLATED.value
        assert change.window_lo != change.window_lo  # NaN: 工作点不在窗口内

        for load in ("zip", "exp"):
            first_change = by_key[(load, trace.segments_for(load)[1].index)]
            assert first_change.verdict != Verdict.STRICTLY_PASSIVE.value
            assert first_change.stability == "unstable"

        reached = [r for r in rows if r.status != SegmentStatus.NOT_REACHED.value]
        assert reached
        for row in reached:
            if row.verdict == Verdict.VIOLATED.value:
                assert row.stability != "stable"
            if row.verdict == Verdict.STRICTLY_PASSIVE.value:
                assert row.stability == "stable"
        for row in rows:
            if row.status == SegmentStatus.NOT_REACHED.value:
                assert row.stability == "n/a"

    def test_energy_nonincreasing_on_certified_segments(self, table1_run):
        _, trace = table1_run
        results = [energy_nonincreasing(trace, seg) for seg in trace.segments]
        assert all(r is not False for r in results)
        assert energy_nonincreasing(trace, trace.segments_for("exp")[0]) is True
