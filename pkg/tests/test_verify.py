import math

import numpy as np
import pytest

from helpers import grid1
from wnil.corpus import make_corpus
from wnil.errors import EmptySweep
from wnil.grid import Ball, ball_family
from wnil.maximal import fractional_maximal, hl_maximal
from wnil.norms import SpaceParams, lebesgue_norm
from wnil.verify import (OperatorSpec, check_local_estimates, fit_exponent, good_lambda_trace, growth,
                         make_decomposition, norm_transfer_experiment)
from wnil.weights import Power

BOX = ((-2.0,), (2.0,))


def bumps(h, count=5, seed=4):
    return make_corpus("bumps", seed, count, *BOX, h)


def power_cell_means(x, h, g):
    """Cell means of |x|^g from the antiderivative sign(x)|x|^(g+1)/(g+1)."""
    P = lambda t: np.sign(t) * np.abs(t) ** (g + 1) / (g + 1)
    return (P(x + h / 2) - P(x - h / 2)) / h


class TestDecomposition:
    @pytest.mark.parametrize("kind", ["cz", "fractional"])
    def test_support_inside_8B(self, kind):
        f = grid1(-2.0, 2.0, 1 / 32, lambda x: np.exp(-x * x * 40) * (np.abs(x) < 0.6))
        dec = make_decomposition(kind, f, Ball((1 / 64,), 0.1))
        assert np.all(dec.on_ball()[2] == 0.0)

    def test_support_outside_8B(self):
        f = grid1(-2.0, 2.0, 1 / 32, lambda x: (x > 1.5).astype(float))
        dec = make_decomposition("cz", f, Ball((-1 + 1 / 64,), 0.1))
        assert np.all(dec.on_ball()[1] == 0.0)

    @pytest.mark.parametrize("kind", ["cz", "fractional", "lp_g", "lp_area", "maximal"])
    def test_domination(self, kind, rng):
        f = grid1(-1.0, 1.0, 1 / 32).with_values(rng.normal(size=64))
        dec = make_decomposition(kind, f, Ball((1 / 64,), 0.07))
        F, FB, RB = dec.on_ball()
        assert dec.domination_gap() <= 1e-12 * np.max(np.abs(FB) + np.abs(RB))

    @pytest.mark.parametrize("kind", ["cz", "fractional"])
    def test_linear_split(self, kind, rng):
        f = grid1(-1.0, 1.0, 1 / 32).with_values(rng.normal(size=64))
        dec = make_decomposition(kind, f, Ball((1 / 64,), 0.07))
        np.testing.assert_allclose(dec.F.values, dec.FB.values + dec.RB.values, atol=1e-12)

    def test_far_ball(self):
        with pytest.raises(ValueError):
            make_decomposition("cz", grid1(), Ball((50.0,), 0.01))


class TestLocalEstimates:
    def test_zero(self):
        f = grid1(*BOX[0], *BOX[1], 1 / 32)
        r = check_local_estimates("cz", f, Ball((1 / 64,), 0.125), SpaceParams(p1=0.5),
                                  ball_family(BOX, 1 / 32))
        assert (r.C1, r.C2, r.lhs1, r.lhs2) == (0.0, 0.0, 0.0, 0.0)

    def test_cz_bounded_and_stable(self):
        worst = []
        for h in (1 / 32, 1 / 64):
            fam = ball_family(BOX, h)
            rows = [check_local_estimates("cz", f, Ball((c + h / 2,), 0.125), SpaceParams(p1=0.5), fam)
                    for f in bumps(h) for c in (-0.5, 0.0, 0.75)]
            assert all(r.domination_gap <= 1e-12 for r in rows)
            worst.append((max(r.C1 for r in rows), max(r.C2 for r in rows)))
        for a, b in zip(*worst):
            assert math.isfinite(a) and abs(b / a - 1) < 0.25

    def test_fractional_uses_fractional_maximal(self):
        h = 1 / 32
        fam = ball_family(BOX, h)
        f = bumps(h, 1)[0]
        B = Ball((h / 2,), 0.125)
        r = check_local_estimates(OperatorSpec("fractional", alpha=0.5), f, B, SpaceParams(p1=0.5), fam)
        mask = make_decomposition("fractional", f, B).mask
        assert r.params["gamma"] == 0.5
        assert r.min_Mf == float(np.min(fractional_maximal(f, 0.5, fam).values[mask]))


class TestGoodLambda:
    @pytest.fixture(scope="class")
    @staticmethod
    def cz_trace():
        h = 1 / 32
        f = bumps(h, 1, seed=7)[0]
        F = OperatorSpec("cz")(f)
        return F, f, good_lambda_trace(F, f, Power(0.5, (0.0,)), SpaceParams(), balls=ball_family(BOX, h))

    def test_zero_pair(self):
        z = grid1(*BOX[0], *BOX[1], 1 / 16)
        tr = good_lambda_trace(z, z, Power(0.5, (0.0,)), SpaceParams(), lams=np.geomspace(0.1, 10, 5))
        assert tr.min_beta == 2.0 and np.all(tr.E == 0) and tr.admissible.all()

    def test_cz_certificate(self, cz_trace):
        tr = cz_trace[2]
        assert tr.min_beta is not None and tr.min_beta <= 2 ** 10
        assert all(tr.upward_closed())

    def test_kappa_monotone(self, cz_trace):
        # smaller kappa lowers the maximal-term threshold, so admissibility can only improve
        adm = cz_trace[2].admissible
        for row in adm:
            hit = np.flatnonzero(row)
            assert hit.size == 0 or row[hit[0]:].all()

    def test_measures_nonincreasing(self, cz_trace):
        tr = cz_trace[2]
        assert np.all(np.diff(tr.E) <= 0)
        assert np.all(np.diff(tr.E_beta, axis=1) <= 0) and np.all(np.diff(tr.max_term, axis=1) <= 0)

    def test_level_measure_oracle(self, cz_trace):
        F, f, tr = cz_trace
        fam = ball_family(BOX, F.h)
        MF = hl_maximal(F.with_values(np.abs(F.values) ** 0.5), fam).values
        wbar = power_cell_means(F.axis_centers(0), F.h, 0.5) * F.h
        ref = np.array([wbar[MF > lam].sum() for lam in tr.lams])
        np.testing.assert_allclose(tr.E, ref, rtol=1e-12, atol=1e-15)

    def test_failure_index(self, cz_trace):
        tr = cz_trace[2]
        assert np.all((tr.first_fail == -1) == tr.admissible)

    def test_empty_sweep(self):
        z = grid1(*BOX[0], *BOX[1], 1 / 16)
        with pytest.raises(EmptySweep):
            good_lambda_trace(z, z, Power(0.5, (0.0,)), SpaceParams(), sweep=([], [0.5]))


class TestNormTransfer:
    def test_lorentz_t_equals_q(self):
        C = bumps(1 / 32)
        w = Power(0.5, (0.0,))
        a = norm_transfer_experiment("cz", "lebesgue", C, w, w, SpaceParams(q=2.0))
        b = norm_transfer_experiment("cz", "lorentz", C, w, w, SpaceParams(q=2.0, t=2.0))
        assert b.ratio == pytest.approx(a.ratio, rel=1e-10)

    def test_zero_skip(self):
        C = bumps(1 / 32, 2) + [grid1(*BOX[0], *BOX[1], 1 / 32)]
        rep = norm_transfer_experiment("cz", "lebesgue", C, params=SpaceParams(q=2.0))
        assert rep.series[0]["skipped"] == 1 and math.isfinite(rep.ratio)

    def test_hilbert_l2_below_symbol_bound(self):
        # the truncated lattice kernel has symbol -i(pi - theta) sign(theta) on (-pi, pi)
        rep = norm_transfer_experiment("cz", "lebesgue", lambda h: make_corpus("mixed", 2, 8, *BOX, h),
                                       params=SpaceParams(q=2.0), h=1 / 32, levels=2)
        assert rep.ratio <= math.pi and abs(growth(rep) - 1) < 0.10

    def test_fractional_exponents_recorded(self):
        C = bumps(1 / 32, 2)
        ok = norm_transfer_experiment(OperatorSpec("fractional", alpha=0.5), "lebesgue", C,
                                      params=SpaceParams(q=4.0, p=4 / 3, alpha=0.5))
        bad = norm_transfer_experiment(OperatorSpec("fractional", alpha=0.5), "lebesgue", C,
                                       params=SpaceParams(q=2.0, p=4 / 3, alpha=0.5))
        assert ok.checks["exponent_relation"] is True and not ok.flags
        assert "hypothesis:exponents" in bad.flags

    def test_lorentz_morrey_truncated_weight(self):
        rep = norm_transfer_experiment("cz", "lorentz_morrey", bumps(1 / 32, 2),
                                       params=SpaceParams(q=2.0, t=3.0, theta=0.5))
        assert rep.checks["truncated_weight"]["rel_diff"] <= 1e-12

    def test_series_matches_direct(self):
        C = bumps(1 / 32, 3)
        rep = norm_transfer_experiment("cz", "lebesgue", C, params=SpaceParams(q=2.0))
        direct = max(lebesgue_norm(OperatorSpec("cz")(f), 2.0) / lebesgue_norm(f, 2.0) for f in C)
        assert rep.ratio == pytest.approx(direct, rel=1e-14)
        assert rep.series[0]["lhs"] / rep.series[0]["rhs"] == pytest.approx(rep.ratio, rel=1e-14)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            norm_transfer_experiment("cz", "sobolev", bumps(1 / 32, 1), params=SpaceParams(q=2.0))
        with pytest.raises(ValueError):
            norm_transfer_experiment("cz", "lebesgue", bumps(1 / 32, 1), params=SpaceParams(q=2.0), levels=2)


class TestHelpers:
    def test_fit_exponent(self):
        x = np.geomspace(1, 100, 7)
        assert fit_exponent(x, 3 * x ** 0.75) == pytest.approx(0.75, rel=1e-12)
