import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from helpers import grid1, grid2, indicator1
from wnil.errors import BadPolicy, EmptyBall, GridMismatch
from wnil.grid import (Ball, BallPolicy, GridFunction, average_over_ball, ball_family,
                       cells_in_ball, distribution_measure, integrate)
from wnil.weights import Constant, Power

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


class TestAverage:
    def test_constant(self):
        f = grid2(fn=lambda x, y: 3.0 + 0 * x)
        assert average_over_ball(f, Ball((0.4, 0.6), 0.3)) == pytest.approx(3.0, rel=1e-15)

    def test_linear_symmetric(self):
        h = 1 / 64
        f = grid1(h=h, fn=lambda x: x)
        assert abs(average_over_ball(f, Ball((0.5,), 0.5)) - 0.5) <= h

    def test_indicator_overlap(self):
        # |[0,1] cap (0,2)| / |(0,2)| = 1/2
        for h in (1 / 16, 1 / 64, 1 / 256):
            f = indicator1(-1.0, 3.0, h)
            assert abs(average_over_ball(f, Ball((1.0,), 1.0)) - 0.5) <= h

    def test_cells_outside_box_count_as_zero(self):
        f = grid1(h=1 / 8, fn=lambda x: 1.0 + 0 * x)
        # centres of B(0, 1/2): -3/16 ... 7/16 ; half of them outside the box
        assert average_over_ball(f, Ball((0.0,), 0.5)) == pytest.approx(0.5)

    def test_empty_ball(self):
        f = grid1(h=1 / 8)
        with pytest.raises(EmptyBall):
            average_over_ball(f, Ball((0.0,), 0.01))

    @given(c=finite, i=st.integers(0, 63), k=st.integers(0, 5))
    def test_constant_every_family_ball(self, c, i, k):
        f = grid1(h=1 / 64, fn=lambda x: c + 0 * x)
        fam = ball_family(((0.0,), (1.0,)), 1 / 64)
        B = fam.ball(i, min(k, len(fam.radii) - 1))
        # zero-extension outside the box: average over the part inside the box
        # equals c times the inside fraction
        inside = sum(1 for x in f.axis_centers(0) if abs(x - B.center[0]) < B.radius)
        total = len(cells_in_ball(f.lo, f.h, B))
        assert average_over_ball(f, B) == pytest.approx(c * inside / total, rel=1e-12, abs=1e-9)


class TestIntegrate:
    def test_unit_square(self):
        f = grid2(fn=lambda x, y: 1.0 + 0 * x)
        assert integrate(f) == pytest.approx(1.0, rel=1e-14)

    def test_power_weight(self):
        # int_0^1 x^(1/2) dx = 2/3
        for h in (1 / 64, 1 / 256):
            f = indicator1(-1.0, 2.0, h)
            assert abs(integrate(f, Power(0.5, (0.0,))) - 2 / 3) <= h

    def test_zero(self):
        assert integrate(grid2()) == 0.0

    def test_midpoint_order(self):
        exact = math.sqrt(math.pi) / 2 * math.erf(1.0)
        hs = [1 / 16, 1 / 32, 1 / 64]
        errs = [abs(integrate(grid1(h=h, fn=lambda x: np.exp(-x * x))) - exact) for h in hs]
        order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert order >= 1.9

    @given(a=hnp.arrays(float, 32, elements=finite), b=hnp.arrays(float, 32, elements=finite),
           s=finite, t=finite)
    def test_linear(self, a, b, s, t):
        f, g = grid1(h=1 / 32).with_values(a), grid1(h=1 / 32).with_values(b)
        lhs = integrate(s * f + t * g)
        rhs = s * integrate(f) + t * integrate(g)
        scale = (abs(s) * np.abs(a).sum() + abs(t) * np.abs(b).sum()) / 32 + 1.0
        assert abs(lhs - rhs) <= 1e-12 * scale

    @given(a=hnp.arrays(float, 32, elements=finite), d=hnp.arrays(float, 32, elements=st.floats(0, 1e3)))
    def test_monotone_abs(self, a, d):
        f = grid1(h=1 / 32).with_values(np.abs(a))
        g = grid1(h=1 / 32).with_values(np.abs(a) + d)
        assert integrate(f, Power(0.5, (0.3,))) <= integrate(g, Power(0.5, (0.3,)))


class TestDistribution:
    def test_indicator_exact(self):
        h = 1 / 64
        f = indicator1(-1.0, 2.0, h, 0.0, 0.5)
        count = int(np.count_nonzero(f.values))
        assert distribution_measure(f, Constant(1.0), 0.5) == count * h

    def test_above_max(self, rng):
        f = grid2().with_values(rng.normal(size=(16, 16)))
        assert distribution_measure(f, None, float(np.abs(f.values).max()) + 1e-9) == 0.0

    def test_linear_level(self):
        # |{x in [0,1] : x > 1/4}| = 3/4
        for h in (1 / 64, 1 / 100):
            f = grid1(h=h, fn=lambda x: x)
            assert abs(distribution_measure(f, None, 0.25) - 0.75) <= h

    def test_lambda_positive(self):
        with pytest.raises(ValueError):
            distribution_measure(grid1(), None, 0.0)

    @given(a=hnp.arrays(float, 40, elements=st.floats(-10, 10)),
           lams=st.lists(st.floats(1e-3, 12), min_size=2, max_size=6))
    def test_monotone_and_matches_integral(self, a, lams):
        f = grid1(0.0, 1.0, 1 / 40).with_values(a)
        w = Power(0.7, (0.5,))
        lams = sorted(lams)
        vals = [distribution_measure(f, w, lam) for lam in lams]
        assert all(x >= y for x, y in zip(vals, vals[1:]))
        for lam, v in zip(lams, vals):
            ind = f.with_values((np.abs(a) > lam).astype(float))
            assert v == pytest.approx(integrate(ind, w), rel=1e-12, abs=1e-15)


class TestFamily:
    def test_count(self):
        fam = ball_family(((0.0,), (1.0,)), 0.25, BallPolicy(K=2))
        assert fam.size == 12
        assert len(list(fam.balls())) == 12
        assert fam.radii == (0.25, 0.5, 1.0)

    def test_stride(self):
        a = ball_family(((0.0,), (1.0,)), 1 / 16)
        b = ball_family(((0.0,), (1.0,)), 1 / 16, BallPolicy(stride=2))
        assert b.n_centers * 2 == a.n_centers

    def test_empty_radius_set(self):
        with pytest.raises(BadPolicy):
            ball_family(((0.0,), (1.0,)), 0.25, BallPolicy(K=-1))
        with pytest.raises(BadPolicy):
            ball_family(((0.0,), (1.0,)), 0.25, BallPolicy(stride=0))

    @pytest.mark.parametrize("box", [((0.0,), (1.0,)), ((0.0, 0.0), (1.0, 1.0))])
    def test_refinement_superset(self, box):
        h = 1 / 8
        coarse, fine = ball_family(box, h), ball_family(box, h / 2)
        assert fine.size > coarse.size
        assert all(fine.represents(B) for B in coarse.balls())

    def test_radii_bounded(self):
        fam = ball_family(((0.0, 0.0), (1.0, 1.0)), 1 / 16, BallPolicy(max_radius_factor=0.5))
        assert fam.max_radius <= 0.5 * math.sqrt(2)
        assert all(r >= 1 / 16 for r in fam.radii)

    def test_ids_round_trip(self):
        fam = ball_family(((0.0, 0.0), (1.0, 1.0)), 1 / 8)
        for k in range(len(fam.radii)):
            for i in (0, 7, fam.n_centers - 1):
                assert fam.ball_from_id(fam.ball_id(i, k)) == fam.ball(i, k)


class TestSerialization:
    @given(v=hnp.arrays(float, (4, 6), elements=st.floats(-1e300, 1e300, allow_subnormal=True)))
    def test_csv_round_trip_bit_exact(self, v):
        f = GridFunction((-0.5, 0.1), (0.5, 1.6), 0.25, v)
        g = GridFunction.from_csv(f.to_csv())
        assert g.same_grid(f)
        assert np.array_equal(g.values.view(np.int64), f.values.view(np.int64))

    @given(v=hnp.arrays(float, 12, elements=finite))
    def test_json_round_trip(self, v):
        f = GridFunction((0.1,), (3.1,), 0.25, v)
        g = GridFunction.from_json(f.to_json())
        assert np.array_equal(g.values, f.values) and g.same_grid(f)

    def test_csv_header(self):
        f = grid2(h=0.5)
        assert f.to_csv().splitlines()[0] == "2,0,0,1,1,0.5"

    def test_rejects_nonfinite_and_bad_box(self):
        with pytest.raises(ValueError):
            GridFunction((0.0,), (1.0,), 0.5, [1.0, np.nan])
        with pytest.raises(GridMismatch):
            GridFunction.zeros((0.0,), (1.0,), 0.3)
