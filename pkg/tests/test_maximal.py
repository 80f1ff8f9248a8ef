import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from helpers import brute_maximal_1d, grid1, grid2, indicator1
from wnil import kernels
from wnil.errors import HypothesisFailed, UncoveredPoint
from wnil.grid import Ball, BallPolicy, average_over_ball, ball_family, cells_in_ball
from wnil.maximal import (fractional_maximal, hl_maximal, level_set_measure, localization_check,
                          weak_11_constant, weak_type_ratio)
from wnil.norms import lebesgue_norm

vals32 = hnp.arrays(float, 32, elements=st.floats(-100, 100))


def fam(f, **kw):
    return ball_family((f.lo, f.hi), f.h, BallPolicy(**kw))


def inv_x_error(h, m):
    f = indicator1(-1.0, 5.0, h)
    M = hl_maximal(f, fam(f, per_octave=m)).values
    x = f.axis_centers(0)
    sel = (x >= 1.5) & (x <= 4.0)
    return float(np.max(np.abs(M[sel] * x[sel] - 1)))


class TestHL:
    @pytest.mark.parametrize("m", [1, 3])
    def test_brute_oracle_exact(self, m, rng):
        f = grid1(h=1 / 32).with_values(rng.normal(size=32))
        F = fam(f, per_octave=m)
        assert np.array_equal(hl_maximal(f, F).values, brute_maximal_1d(f, [r / f.h for r in F.radii]))

    def test_indicator_brute_oracle_exact(self):
        f = indicator1(-1.0, 3.0, 1 / 64)
        F = fam(f)
        assert np.array_equal(hl_maximal(f, F).values, brute_maximal_1d(f, [r / f.h for r in F.radii]))

    def test_constant(self):
        f = grid2(fn=lambda x, y: 2.5 + 0 * x)
        assert np.all(hl_maximal(f, fam(f)).values == 2.5)

    def test_zero(self):
        f = grid2()
        assert np.all(hl_maximal(f, fam(f)).values == 0.0)

    @given(v=vals32)
    def test_dominates_abs(self, v):
        f = grid1(h=1 / 32).with_values(v)
        assert np.all(hl_maximal(f, fam(f)).values >= np.abs(v))

    @given(a=vals32, b=vals32)
    def test_sublinear(self, a, b):
        f, g = grid1(h=1 / 32).with_values(a), grid1(h=1 / 32).with_values(b)
        F = fam(f)
        lhs = hl_maximal(f + g, F).values
        rhs = hl_maximal(f, F).values + hl_maximal(g, F).values
        assert np.all(lhs <= rhs * (1 + 1e-14) + 1e-12)

    def test_inverse_x_limit(self):
        # the sup over all intervals containing x >= 1 is attained on [0, x]
        coarse, fine = inv_x_error(1 / 256, 8), inv_x_error(1 / 512, 16)
        assert coarse <= 0.10
        assert fine < coarse

    def test_dyadic_ladder_gap(self):
        # with radii h 2^k only, x = 2.5 sees at best a mean of 1/4
        f = indicator1(-1.0, 5.0, 1 / 64)
        M = hl_maximal(f, fam(f)).values
        i = int(np.argmin(np.abs(f.axis_centers(0) - 2.5078125)))
        assert M[i] == pytest.approx(0.25, abs=1 / 64)

    def test_witnessing_ball(self, rng):
        f = grid2(h=1 / 16).with_values(rng.normal(size=(16, 16)))
        F = fam(f)
        M, arg = hl_maximal(f, F, return_arg=True)
        a = f.with_values(np.abs(f.values))
        for cell in [(0, 0), (3, 7), (15, 15), (8, 2)]:
            B = F.ball_from_id(arg[cell])
            assert average_over_ball(a, B) == pytest.approx(M.values[cell], rel=1e-13)
            idx = cells_in_ball(f.lo, f.h, B)
            ok = np.all((idx >= 0) & (idx < 16), axis=1)
            assert cell in {tuple(i) for i in idx[ok]}
            assert np.all(M.values[tuple(idx[ok].T)] >= M.values[cell] * (1 - 1e-13))

    def test_uncovered(self):
        f = grid1(h=1 / 16)
        with pytest.raises(UncoveredPoint):
            hl_maximal(f, fam(f, stride=2, K=0))

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            hl_maximal(grid1(h=1 / 16), fam(grid1(h=1 / 32)))

    def test_backends_agree(self, rng):
        f = grid2(h=1 / 16).with_values(rng.normal(size=(16, 16)))
        F = fam(f)
        a, ia = hl_maximal(f, F, True, impl=kernels.backend("python"))
        b, ib = hl_maximal(f, F, True)
        assert np.array_equal(a.values, b.values) and np.array_equal(ia, ib)


class TestFractional:
    @given(v=vals32)
    def test_gamma_zero_bit_identical(self, v):
        f = grid1(h=1 / 32).with_values(v)
        F = fam(f)
        assert np.array_equal(fractional_maximal(f, 0.0, F).values, hl_maximal(f, F).values)

    def test_indicator_limit(self):
        # inside B0 = [0, 1/2] the best ball is B0 itself: |B0|^gamma
        errs = []
        for h in (1 / 128, 1 / 256):
            f = indicator1(-0.5, 1.0, h, 0.0, 0.5)
            M = fractional_maximal(f, 0.5, fam(f)).values
            x = f.axis_centers(0)
            errs.append(float(np.max(np.abs(M[(x > 0.1) & (x < 0.4)] / math.sqrt(0.5) - 1))))
        assert errs[1] <= 0.02 and errs[1] < errs[0]

    def test_zero_and_range(self):
        f = grid1(h=1 / 16)
        assert np.all(fractional_maximal(f, 0.3, fam(f)).values == 0.0)
        with pytest.raises(ValueError):
            fractional_maximal(f, 1.0, fam(f))

    def test_brute(self, rng):
        f = grid1(h=1 / 16).with_values(rng.normal(size=16))
        F = fam(f)
        g = 0.4
        out = np.zeros(16)
        for B in F.balls():
            idx = cells_in_ball(f.lo, f.h, B)[:, 0]
            inside = idx[(idx >= 0) & (idx < 16)]
            val = (len(idx) * f.h) ** g * np.abs(f.values[inside]).sum() / len(idx)
            out[inside] = np.maximum(out[inside], val)
        np.testing.assert_allclose(fractional_maximal(f, g, F).values, out, rtol=1e-14)


class TestLevelSet:
    def test_above_max(self, rng):
        F = grid1(h=1 / 32).with_values(rng.normal(size=32))
        top = float(np.max(hl_maximal(F.with_values(F.values ** 2), fam(F)).values))
        assert level_set_measure(F, 2.0, top * 1.01, None, fam(F)) == 0.0

    def test_whole_box(self):
        F = grid2(fn=lambda x, y: 1.0 + 0 * x)
        assert level_set_measure(F, 1.0, 0.5, None, fam(F)) == pytest.approx(1.0, rel=1e-14)

    def test_monotone(self, rng):
        F = grid1(h=1 / 32).with_values(rng.normal(size=32))
        v = [level_set_measure(F, 1.5, lam, None, fam(F)) for lam in np.geomspace(0.01, 5, 20)]
        assert all(a >= b for a, b in zip(v, v[1:]))


def corpus(h):
    rng = np.random.default_rng(5)
    out = [indicator1(-2.0, 3.0, h)]
    for _ in range(5):
        c, s = rng.uniform(-1, 2), rng.uniform(0.05, 0.5)
        out.append(grid1(-2.0, 3.0, h, lambda x, c=c, s=s: np.exp(-((x - c) / s) ** 2)))
    return out


class TestWeak:
    def test_indicator_constant(self):
        f = indicator1(-4.0, 5.0, 1 / 32)
        c = weak_11_constant([f], fam(f))
        assert 1.0 <= c <= 3.0

    def test_at_least_one(self):
        C = corpus(1 / 32)
        assert weak_11_constant(C, fam(C[0])) >= 1.0

    def test_exact_dominates_sweep(self):
        f = corpus(1 / 32)[2]
        Mf = hl_maximal(f, fam(f))
        assert weak_type_ratio(Mf, f) >= weak_type_ratio(Mf, f, np.geomspace(1e-3, 2, 200)) * (1 - 1e-12)

    def test_refinement_stable(self):
        a, b = (weak_11_constant(corpus(h), fam(corpus(h)[0])) for h in (1 / 32, 1 / 64))
        assert abs(b / a - 1) < 0.10

    def test_zero_norm(self):
        with pytest.raises(ValueError):
            weak_type_ratio(grid1(), grid1())

    @pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
    def test_strong_pp(self, p):
        ratios = []
        for h in (1 / 32, 1 / 64):
            C = corpus(h)
            F = fam(C[0])
            ratios.append(max(lebesgue_norm(hl_maximal(f, F), p) / lebesgue_norm(f, p) for f in C))
        assert math.isfinite(ratios[0]) and abs(ratios[1] / ratios[0] - 1) < 0.10


class TestLocalization:
    def test_supported_in_8B(self, rng):
        f = grid1(-1.0, 3.0, 1 / 16)
        B = Ball((1.0,), 0.5)
        v = np.where(np.abs(f.axis_centers(0) - 1.0) < 2.0, rng.uniform(0, 1, f.shape[0]), 0.0)
        f = f.with_values(v)
        lam = float(np.min(hl_maximal(f, fam(f)).values))
        rep = localization_check(f, B, lam, [1, 2, 4, 8], fam(f))
        assert rep.K0 == 1.0

    def test_far_ball(self):
        f = indicator1(-1.0, 19.0, 1 / 16)
        F = fam(f)
        B = Ball((10.03125,), 1.0)
        i = int(np.argmin(np.abs(f.axis_centers(0) - 10.0)))
        lam = float(hl_maximal(f, F).values[i])
        rep = localization_check(f, B, lam, [1, 2, 4], F)
        assert math.isfinite(rep.K0)

    def test_lambda_zero(self):
        f = indicator1(-1.0, 3.0, 1 / 16)
        with pytest.raises(HypothesisFailed):
            localization_check(f, Ball((1.0,), 0.5), 0.0, [1], fam(f))
