#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
@Date       : 10/17/26 5:20 PM
@File       : test_loads.py
@Description: 负荷模型: 功率、电流、两段式分支、参数修改
"""
import math

import numpy as np
import pytest

from core.exceptions import LoadParameterError, SingularityError, VoltageDomainError
from core.loads import (
    DqVector, ExpParams, TwoTierParams, ZipParams,
    active_branch, current_exp, current_from_power, current_twotier, current_zip,
    describe_model, load_current, load_jacobian, load_power, power_derivatives,
    power_exp, power_zip, update_model,
)
from core.passivity import numeric_jacobian


def _power_of(current: DqVector, v: DqVector):
    return v.d * current.d + v.q * current.q, v.q * current.d - v.d * current.q


class TestPower:
    def test_admittance_only(self):
        assert power_zip(ZipParams(y_p=0.15), 400.0) == (pytest.approx(24000.0), 0.0)

    def test_table1_zip(self, zip_base):
        active, reactive = power_zip(zip_base, 400.0)
        assert active == pytest.approx(0.15 * 400 ** 2 + 2 * 400 + 4500)
        assert active == pytest.approx(29300.0)
        assert reactive == pytest.approx(0.05 * 400 ** 2 + 9 * 400 + 19000)

    def test_zip_linear_in_parameters(self, zip_base):
        doubled = ZipParams(*(2 * getattr(zip_base, f) for f in ("y_p", "i_p", "p_p", "y_q", "i_q", "p_q")))
        for v in (50.0, 333.3, 900.0):
            base, twice = power_zip(zip_base, v), power_zip(doubled, v)
            assert twice[0] == pytest.approx(2 * base[0])
            assert twice[1] == pytest.approx(2 * base[1])

    def test_exp_nominal(self, exp_base):
        assert power_exp(exp_base, 400.0) == (5500.0, 3700.0)

    def test_exp_quadratic_matches_admittance(self):
        exp = ExpParams(p0=5500.0, q0=3700.0, n_p=2.0, n_q=2.0, v0=400.0)
        zip_ = ZipParams(y_p=5500.0 / 400 ** 2, y_q=3700.0 / 400 ** 2)
        for v in (10.0, 280.0, 400.0, 1234.5):
            np.testing.assert_allclose(power_exp(exp, v), power_zip(zip_, v), rtol=1e-12)

    def test_exp_table1_half_voltage(self, exp_base):
        active, _ = power_exp(exp_base, 200.0)
        assert active == pytest.approx(5500.0 * 0.5 ** 1.7, rel=1e-12)

    @pytest.mark.parametrize("v", [0.0, -1.0, float("nan")])
    def test_non_positive_voltage(self, zip_base, exp_base, v):
        with pytest.raises(VoltageDomainError):
            power_zip(zip_base, v)
        with pytest.raises(VoltageDomainError):
            power_exp(exp_base, v)

    def test_derivatives_match_finite_difference(self, zip_base, exp_base):
        for model in (zip_base, exp_base):
            v, h = 377.0, 1e-3
            dp, dq = power_derivatives(model, v)
            (p1, q1), (p0, q0) = load_power(model, v + h), load_power(model, v - h)
            assert dp == pytest.approx((p1 - p0) / (2 * h), rel=1e-6)
            assert dq == pytest.approx((q1 - q0) / (2 * h), rel=1e-6)


class TestCurrent:
    def test_zero_power(self):
        assert current_from_power(0.0, 0.0, DqVector(120.0, -40.0)) == DqVector(0.0, 0.0)

    def test_pure_active_on_d_axis(self):
        i = current_from_power(24000.0, 0.0, DqVector(400.0, 0.0))
        assert i.d == pytest.approx(60.0)
        assert i.q == pytest.approx(0.0)

    def test_power_identities(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            active, reactive = rng.uniform(-5e4, 5e4, size=2)
            v = DqVector.from_polar(rng.uniform(1.0, 800.0), rng.uniform(0.0, 2 * math.pi))
            p, q = _power_of(current_from_power(active, reactive, v), v)
            assert p == pytest.approx(active, rel=1e-9, abs=1e-9)
            assert q == pytest.approx(reactive, rel=1e-9, abs=1e-9)

    def test_singular_voltage(self):
        with pytest.raises(SingularityError):
            current_from_power(1.0, 1.0, DqVector(0.0, 0.0))
        with pytest.raises(SingularityError):
            current_zip(ZipParams(p_p=1.0), DqVector(1e-7, 0.0))

    def test_zip_admittance_only(self, zip_only):
        i = current_zip(zip_only, DqVector(400.0, 0.0))
        assert i.d == pytest.approx(60.0)
        assert i.q == pytest.approx(-20.0)

    def test_zip_table1(self, zip_base):
        i = current_zip(zip_base, DqVector(400.0, 0.0))
        assert i.d == pytest.approx(4500 / 400 + 2 + 60)
        assert i.d == pytest.approx(73.25)
        assert i.q == pytest.approx(-76.5)

    def test_zip_satisfies_power_identities(self, zip_base):
        v = DqVector(283.0, -150.0)
        p, q = _power_of(current_zip(zip_base, v), v)
        expected = power_zip(zip_base, v.amplitude())
        assert p == pytest.approx(expected[0], rel=1e-12)
        assert q == pytest.approx(expected[1], rel=1e-12)

    @pytest.mark.parametrize("phi", [0.3, 1.7, -2.9])
    def test_rotation_equivariance(self, zip_base, exp_base, phi):
        v = DqVector(390.0, 25.0)
        for model in (zip_base, exp_base):
            rotated = load_current(model, v.rotated(phi))
            expected = load_current(model, v).rotated(phi)
            assert rotated.d == pytest.approx(expected.d, rel=1e-12, abs=1e-9)
            assert rotated.q == pytest.approx(expected.q, rel=1e-12, abs=1e-9)

    def test_exp_nominal(self, exp_base):
        i = current_exp(exp_base, DqVector(400.0, 0.0))
        assert i.d == pytest.approx(13.75)
        assert i.q == pytest.approx(-9.25)

    def test_exp_quadratic_matches_zip(self):
        exp = ExpParams(p0=5500.0, q0=3700.0, n_p=2.0, n_q=2.0, v0=400.0)
        zip_ = ZipParams(y_p=5500.0 / 400 ** 2, y_q=3700.0 / 400 ** 2)
        for v in (DqVector(10.0, 3.0), DqVector(-300.0, 250.0), DqVector(400.0, 0.0)):
            a, b = current_exp(exp, v), current_zip(zip_, v)
            assert a.d == pytest.approx(b.d, rel=1e-12)
            assert a.q == pytest.approx(b.q, rel=1e-12)

    def test_exp_satisfies_power_identities(self, exp_base):
        v = DqVector(-120.0, 310.0)
        p, q = _power_of(current_exp(exp_base, v), v)
        expected = power_exp(exp_base, v.amplitude())
        assert p == pytest.approx(expected[0], rel=1e-12)
        assert q == pytest.approx(expected[1], rel=1e-12)


class TestTwoTier:
    @pytest.fixture
    def two_tier(self, exp_base) -> TwoTierParams:
        return TwoTierParams.from_upper(exp_base)

    def test_default_threshold_and_branch(self, two_tier, exp_base):
        assert two_tier.v_threshold == pytest.approx(280.0)
        assert two_tier.z_only == ZipParams(y_p=5500.0 / 400 ** 2, y_q=3700.0 / 400 ** 2)
        assert two_tier.upper is exp_base

    def test_low_voltage_uses_admittance(self, two_tier):
        v = DqVector(200.0, 0.0)
        assert current_twotier(two_tier, v) == current_zip(two_tier.z_only, v)

    def test_nominal_uses_upper(self, two_tier, exp_base):
        v = DqVector(400.0, 0.0)
        assert current_twotier(two_tier, v) == current_exp(exp_base, v)

    def test_threshold_is_inclusive(self, two_tier, exp_base):
        v = DqVector(two_tier.v_threshold, 0.0)
        assert active_branch(two_tier, two_tier.v_threshold) is exp_base
        upper = current_twotier(two_tier, v)
        assert upper == current_exp(exp_base, v)
        # 阈值两侧电流不连续 (n_p ≠ 2)
        jump = upper - current_zip(two_tier.z_only, v)
        assert jump.amplitude() > 0.1

    def test_zip_upper_needs_v0(self, zip_base):
        with pytest.raises(LoadParameterError):
            TwoTierParams.from_upper(zip_base)
        model = TwoTierParams.from_upper(zip_base, v0=400.0)
        assert model.z_only == ZipParams(y_p=0.15, y_q=0.05)

    def test_z_only_must_be_admittance(self, exp_base):
        with pytest.raises(LoadParameterError):
            TwoTierParams(upper=exp_base, z_only=ZipParams(y_p=0.1, i_p=1.0), v_threshold=280.0)


class TestParameters:
    def test_negative_rejected(self):
        with pytest.raises(LoadParameterError):
            ZipParams(y_p=-0.1)
        with pytest.raises(LoadParameterError):
            ExpParams(p0=1.0, q0=1.0, n_p=1.0, n_q=1.0, v0=0.0)

    def test_from_coefficients(self):
        p = ZipParams.from_coefficients(p0=8000.0, q0=2000.0, v0=400.0,
                                        a_z=0.5, a_i=0.3, a_p=0.2, b_z=1.0, b_i=0.0, b_p=0.0)
        assert p.y_p == pytest.approx(0.5 * 8000 / 400 ** 2)
        assert p.i_p == pytest.approx(0.3 * 8000 / 400)
        assert p.p_p == pytest.approx(0.2 * 8000)
        assert power_zip(p, 400.0)[0] == pytest.approx(8000.0)
        assert power_zip(p, 400.0)[1] == pytest.approx(2000.0)

    def test_update_model(self, zip_base):
        changed = update_model(zip_base, {"y_p": 0.1, "p_q": 11000})
        assert changed.y_p == 0.1 and changed.p_q == 11000.0
        assert zip_base.y_p == 0.15

    def test_update_two_tier_dotted(self, exp_base):
        model = TwoTierParams.from_upper(exp_base)
        changed = update_model(model, {"upper.n_p": 1.1, "v_threshold": 300.0})
        assert changed.upper.n_p == 1.1
        assert changed.v_threshold == 300.0
        assert changed.z_only == model.z_only

    @pytest.mark.parametrize("changes", [{"y_x": 1.0}, {"y_p": "big"}, {"y_p": -1.0}, {"upper.n_p": 1.0}])
    def test_update_rejects(self, zip_base, changes):
        with pytest.raises(LoadParameterError):
            update_model(zip_base, changes)

    def test_describe(self, zip_base):
        assert describe_model(zip_base).startswith("zip y_p=0.15 i_p=2 p_p=4500")


class TestJacobian:
    @pytest.mark.parametrize("v", [DqVector(400.0, 0.0), DqVector(283.0, 283.0), DqVector(-150.0, 390.0)])
    def test_closed_form_matches_difference(self, zip_base, exp_base, v):
        for model in (zip_base, exp_base):
            np.testing.assert_allclose(load_jacobian(model, v), numeric_jacobian(model, v), atol=1e-6)

    def test_admittance_only_is_constant(self, zip_only):
        expected = np.array([[0.15, 0.05], [-0.05, 0.15]])
        for v in (DqVector(1.0, 0.0), DqVector(-700.0, 20.0)):
            np.testing.assert_allclose(load_jacobian(zip_only, v), expected, atol=1e-12)
