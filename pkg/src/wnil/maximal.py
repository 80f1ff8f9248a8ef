"""Hardy-Littlewood and fractional maximal operators over a ball family.

For every radius the ball sums at all centres come from one stencil pass,
and a scatter pass writes each ball's value onto the cells it covers,
keeping the running maximum. Total work is the sum of the ball sizes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import HypothesisFailed, UncoveredPoint
from .grid import cells_in_ball
from .norms import lorentz_norm

__all__ = [
    "padded_maximal", "hl_maximal", "fractional_maximal", "level_set_measure",
    "weak_11_constant", "weak_type_ratio", "LocalizationReport", "localization_check",
]


def padded_maximal(P, balls, gamma=0.0, impl=None):
    """Maximal function of the padded array ``P`` (absolute values taken).

    Returns
    -------
    M : ndarray
        Maximal function on the padded lattice; ``-inf`` where no ball reaches.
    arg : ndarray of int64
        Id of the first ball (family order) attaining the maximum, -1 if none.
    """
    A = np.ascontiguousarray(np.abs(P), dtype=float)
    M = np.full(A.shape, -np.inf)
    arg = np.full(A.shape, -1, dtype=np.int64)
    cy, cx = balls.padded_centers()
    ids0 = np.arange(balls.n_centers, dtype=np.int64)
    vol = balls.h ** balls.dim
    for k in range(len(balls.radii)):
        off = balls.offsets(k)
        avg = kernels.stencil_sum(A, cy, cx, off[:, 0], off[:, 1], impl=impl) / len(off)
        if gamma != 0.0:
            avg = avg * (len(off) * vol) ** gamma
        kernels.scatter_max(M, arg, cy, cx, off[:, 0], off[:, 1], avg,
                            ids0 + k * balls.n_centers, impl=impl)
    return M, arg


def _check_family(f, balls):
    if not (f.lo == balls.lo and f.hi == balls.hi and f.h == balls.h):
        raise ValueError("ball family and function live on different grids")


def _maximal(f, balls, gamma, return_arg, impl):
    _check_family(f, balls)
    M, arg = padded_maximal(balls.embed(f.values), balls, gamma, impl)
    Mb = balls.crop(M)
    if np.any(np.isinf(Mb)):
        raise UncoveredPoint("some cell lies in no ball of the family")
    out = f.with_values(Mb)
    if return_arg:
        return out, balls.crop(arg).copy()
    return out


def hl_maximal(f, balls, return_arg=False, impl=None):
    """Uncentred Hardy-Littlewood maximal function over the family.

    With ``return_arg`` the id of a maximizing ball per cell is also returned
    (see :meth:`BallFamily.ball_from_id`).
    """
    return _maximal(f, balls, 0.0, return_arg, impl)


def fractional_maximal(f, gamma, balls, return_arg=False, impl=None):
    """sup over family balls containing x of |B|^gamma times the mean of |f|."""
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    return _maximal(f, balls, float(gamma), return_arg, impl)


def level_set_measure(F, p1, lam, w, balls):
    """Weighted measure of {M(|F|^p1) > lam} inside the box."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    from .grid import distribution_measure

    MF = hl_maximal(F.with_values(np.abs(F.values) ** p1), balls)
    return distribution_measure(MF, w, lam)


def weak_type_ratio(Tf, f, lams=None):
    """sup over lam of lam |{|Tf| > lam}| / ||f||_1.

    With ``lams=None`` the supremum is taken exactly over the jump levels of
    the distribution function (left limits), which dominates any sweep.
    """
    l1 = float(np.sum(np.abs(f.values)) * f.cell_volume)
    if l1 == 0:
        raise ValueError("f must have positive L1 norm")
    if lams is None:
        return lorentz_norm(Tf, 1.0, math.inf) / l1
    a = np.abs(Tf.values).ravel()
    hv = Tf.cell_volume
    return max(lam * np.count_nonzero(a > lam) * hv for lam in lams) / l1


def weak_11_constant(corpus, balls, lams=None):
    """max over the corpus of the weak-(1,1) ratio of M."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    return max(weak_type_ratio(hl_maximal(f, balls), f, lams) for f in corpus)


@dataclass
class LocalizationReport:
    """Smallest K0 in the sweep for which every tested inclusion holds."""

    K0: float
    x0: tuple
    rows: list = field(default_factory=list)


def localization_check(f, B, lam, K_grid, balls, K0_sweep=None):
    """Empirical K0 for {x in B: Mf > K lam} within {M(f 1_8B) > (K/K0) lam}.

    Raises
    ------
    HypothesisFailed
        If no cell of 4B has M f <= lam (including lam <= 0).
    """
    if K0_sweep is None:
        K0_sweep = 2.0 ** (np.arange(0, 81) / 4)
    if not lam > 0:
        raise HypothesisFailed("lambda must be positive")
    Mf = hl_maximal(f, balls)

    def box_cells(ball):
        idx = cells_in_ball(f.lo, f.h, ball)
        ok = np.ones(len(idx), dtype=bool)
        for a, n in enumerate(f.shape):
            ok &= (idx[:, a] >= 0) & (idx[:, a] < n)
        return tuple(idx[ok].T)

    c4 = box_cells(B.scaled(4))
    good = np.flatnonzero(Mf.values[c4] <= lam)
    if good.size == 0:
        raise HypothesisFailed("no x0 in 4B with M f(x0) <= lambda")
    x0 = tuple(f.lo[a] + (c4[a][good[0]] + 0.5) * f.h for a in range(f.dim))
    mask = np.zeros(f.shape, dtype=bool)
    mask[box_cells(B.scaled(8))] = True
    Mg = hl_maximal(f.with_values(np.where(mask, f.values, 0.0)), balls)
    cb = box_cells(B)
    mf, mg = Mf.values[cb], Mg.values[cb]
    rows = []
    for K in K_grid:
        sel = mf > K * lam
        rows.append({"K": float(K), "count": int(sel.sum()),
                     "min_local": float(mg[sel].min()) if sel.any() else math.inf})
    for K0 in K0_sweep:
        if all(r["min_local"] > r["K"] * lam / K0 for r in rows if r["K"] >= K0):
            return LocalizationReport(float(K0), x0, rows)
    return LocalizationReport(math.inf, x0, rows)
