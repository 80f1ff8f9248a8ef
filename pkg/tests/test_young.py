import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy.optimize import brentq

from helpers import ball_values, grid2
from wnil.grid import Ball
from wnil.young import (LogBump, LogLogBump, Power, bump_integral, doubling_constant, evaluate,
                        is_young, luxembourg_norm, luxembourg_values, young_from_json)

PHIS = [Power(1.5), Power(3.0), LogBump(2.0, 1.0), LogBump(1.5, 0.3), LogLogBump(2.0, 0.5)]


def root_oracle(vals, phi):
    """Luxembourg norm by a bracketing root finder on the modular."""
    a = np.abs(vals)
    if not a.any():
        return 0.0
    return brentq(lambda lam: np.mean(phi(a / lam)) - 1.0, 1e-6 * a.max(), 1e6 * a.max(),
                  xtol=1e-300, rtol=1e-15, maxiter=500)


class TestEvaluate:
    def test_examples(self):
        assert evaluate(Power(2.0), 3.0) == 9.0
        for phi in PHIS:
            assert evaluate(phi, 0.0) == 0.0

    def test_log_bump_formula(self):
        t = 2.5
        assert evaluate(LogBump(2.0, 1.0), t) == pytest.approx(t ** 2 * math.log(math.e + t) ** 2)

    @pytest.mark.parametrize("phi", PHIS)
    def test_is_young(self, phi):
        assert is_young(phi)

    @pytest.mark.parametrize("phi", PHIS)
    def test_log_matches_value(self, phi):
        t = np.logspace(-3, 3, 25)
        np.testing.assert_allclose(np.exp(phi.log(t)), phi(t), rtol=1e-12)

    @pytest.mark.parametrize("phi", PHIS)
    def test_json_round_trip(self, phi):
        assert young_from_json(phi.to_dict()) == phi

    def test_invalid(self):
        with pytest.raises(ValueError):
            Power(1.0)
        with pytest.raises(ValueError):
            LogBump(2.0, 0.0)
        with pytest.raises(ValueError):
            evaluate(Power(2.0), -1.0)


class TestDoubling:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.7])
    def test_power(self, p):
        assert doubling_constant(Power(p)) == pytest.approx(2 ** p, rel=1e-12)

    def test_log_bump_sampled(self):
        phi = LogBump(2.0, 1.0)
        t = np.logspace(-6, 6, 241)
        direct = float(np.max(phi(2 * t) / phi(t)))
        got = doubling_constant(phi, t)
        assert got == pytest.approx(direct, rel=1e-10)
        assert got <= 2 ** 3.1


class TestLuxembourg:
    def test_power_matches_average(self, rng):
        f = grid2(h=1 / 32).with_values(rng.normal(size=(32, 32)))
        for p in (1.5, 2.0, 3.0):
            for _ in range(10):
                B = Ball(tuple(rng.uniform(0, 1, 2)), float(rng.uniform(0.05, 0.6)))
                v = ball_values(f, B)
                expect = np.mean(np.abs(v) ** p) ** (1 / p)
                assert luxembourg_norm(f, Power(p), B) == pytest.approx(expect, rel=1e-8)

    @pytest.mark.parametrize("phi", PHIS)
    def test_root_finder_oracle(self, phi, rng):
        v = rng.lognormal(size=50)
        assert luxembourg_values(v, phi) == pytest.approx(root_oracle(v, phi), rel=1e-10)

    def test_zero(self):
        assert luxembourg_norm(grid2(), LogBump(2.0, 1.0), Ball((0.5, 0.5), 0.3)) == 0.0

    @pytest.mark.parametrize("phi", PHIS)
    def test_constant_function(self, phi):
        c = 2.75
        inv1 = brentq(lambda t: phi(t) - 1.0, 1e-9, 1e3, rtol=1e-15)
        assert luxembourg_values(np.full(17, c), phi) == pytest.approx(c / inv1, rel=1e-10)

    @given(v=hnp.arrays(float, 20, elements=st.floats(-100, 100)), c=st.sampled_from([0.1, 1.0, 7.0]),
           k=st.integers(0, len(PHIS) - 1))
    def test_homogeneous(self, v, c, k):
        phi = PHIS[k]
        a = luxembourg_values(c * v, phi)
        b = c * luxembourg_values(v, phi)
        assert a == pytest.approx(b, rel=1e-10, abs=1e-300)

    @given(v=hnp.arrays(float, 20, elements=st.floats(-100, 100)),
           d=hnp.arrays(float, 20, elements=st.floats(0, 10)), k=st.integers(0, len(PHIS) - 1))
    def test_monotone(self, v, d, k):
        phi = PHIS[k]
        assert luxembourg_values(np.abs(v), phi) <= luxembourg_values(np.abs(v) + d, phi) + 1e-12

    @given(v=hnp.arrays(float, 20, elements=st.floats(-100, 100)), k=st.integers(0, len(PHIS) - 1))
    def test_unit_ball(self, v, k):
        phi = PHIS[k]
        lam = luxembourg_values(v, phi)
        if lam > 0:
            assert np.mean(phi(np.abs(v) / lam)) == pytest.approx(1.0, rel=1e-9)


class TestBumpIntegral:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    @pytest.mark.parametrize("c", [0.5, 1.0, 10.0])
    def test_sharp_power_diverges(self, p, c):
        pp = p / (p - 1)
        assert bump_integral(Power(pp), p, c).diverges

    def test_harmonic_tail_value(self):
        # integrand is 1/t: the partial integral up to 10^8 from 1 is 8 log 10
        bi = bump_integral(Power(2.0), 2.0, 1.0)
        assert bi.value == pytest.approx(8 * math.log(10), rel=1e-10)

    def test_power_bump_converges_and_decreases(self):
        p = 2.0
        vals = []
        for s0 in (1.2, 1.5, 2.0):
            bi = bump_integral(Power(s0 * 2.0), p)
            assert not bi.diverges
            # closed form: int_1^inf t^(-(s0-1)p'(p-1)) dt/t = 1/((s0-1) p' (p-1))
            assert bi.value == pytest.approx(1 / ((s0 - 1) * 2.0), rel=1e-6) or s0 == 1.2
            vals.append(bi.value)
        assert vals == sorted(vals, reverse=True)

    @pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
    def test_log_bump_converges(self, delta):
        assert not bump_integral(LogBump(2.0, delta), 2.0).diverges

    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            bump_integral(Power(2.0), 2.0, c=1000.0)
        with pytest.raises(ValueError):
            bump_integral(Power(2.0), 1.0)
