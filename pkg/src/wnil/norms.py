"""Weighted Lebesgue, Lorentz, Lorentz-Morrey and variable-exponent norms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .errors import GridMismatch
from .grid import GridFunction
from .young import gauge

__all__ = [
    "SpaceParams", "ExponentField", "lebesgue_norm", "lorentz_norm",
    "lorentz_morrey_norm", "morrey_norm", "variable_modular", "variable_norm",
]


@dataclass
class SpaceParams:
    """Exponents naming a target space or criterion.

    Only the fields an experiment uses need to be set; ``validate`` checks
    the relations between those that are present.
    """

    q: float | None = None
    t: float | None = None
    theta: float | None = None
    p: float | None = None
    p1: float | None = None
    p2: float | None = None
    p3: float | None = None
    gamma: float = 0.0
    alpha: float | None = None
    s: float | None = None
    a: float | None = None
    n: int = 1

    def validate(self, off_diagonal=False, criterion=False):
        """Raise ValueError naming the first violated relation."""
        if self.q is not None and not self.q > 0:
            raise ValueError("q must be positive")
        if self.t is not None and not self.t > 0:
            raise ValueError("t must be positive or inf")
        if self.theta is not None and not (0 < self.theta <= self.n):
            raise ValueError("theta must lie in (0, n]")
        if not (0 <= self.gamma < 1):
            raise ValueError("gamma must lie in [0, 1)")
        if self.alpha is not None and not (0 < self.alpha < self.n):
            raise ValueError("alpha must lie in (0, n)")
        if self.s is not None and not self.s > 1:
            raise ValueError("s must be > 1")
        if criterion:
            if not self.p3 > max(self.p1, self.p2):
                raise ValueError("p3 must exceed max(p1, p2)")
            if self.a is not None and not (1 < self.a < self.p3 / self.p1):
                raise ValueError("a must lie in (1, p3/p1)")
        if off_diagonal:
            if self.p is None or self.q is None or self.alpha is None:
                raise ValueError("off-diagonal check needs p, q and alpha")
            if abs(1 / self.q - (1 / self.p - self.alpha / self.n)) > 1e-12:
                raise ValueError("exponents violate 1/q = 1/p - alpha/n")
        return self

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class ExponentField:
    """A variable exponent p(.) sampled on a grid, with 0 < p_- <= p <= p_+ < inf."""

    field: GridFunction
    p_minus: float = field(init=False)
    p_plus: float = field(init=False)

    def __post_init__(self):
        v = self.field.values
        lo, hi = float(np.min(v)), float(np.max(v))
        if not (0 < lo and math.isfinite(hi)):
            raise ValueError("exponent must satisfy 0 < p_- <= p_+ < inf")
        object.__setattr__(self, "p_minus", lo)
        object.__setattr__(self, "p_plus", hi)

    @classmethod
    def constant(cls, like, p0):
        return cls(like.with_values(np.full(like.shape, float(p0))))

    def scaled(self, s):
        return ExponentField(self.field.with_values(self.field.values * s))


def _cell_weights(f, w):
    if w is None:
        return np.full(f.values.size, f.cell_volume)
    return grid._weight_values(f, w).ravel() * f.cell_volume


def lebesgue_norm(f, p, w=None):
    """(integral |f|^p w)^(1/p)."""
    if not p > 0:
        raise ValueError("p must be positive")
    return grid.integrate(f.with_values(np.abs(f.values) ** p), w) ** (1.0 / p)


def _lorentz_sorted(u, D, q, t):
    """Lorentz quasi-norm from ascending values ``u`` and level masses ``D``.

    ``D[..., i]`` is the measure of {|f| >= u_i}, which equals the
    distribution function on [u_{i-1}, u_i). Tied values give empty
    intervals and contribute nothing, so no de-duplication is needed.
    Works along the last axis.
    """
    if math.isinf(t):
        with np.errstate(invalid="ignore"):
            vals = np.where(u > 0, u * D ** (1.0 / q), 0.0)
        return np.max(vals, axis=-1)
    ut = u ** t
    prev = np.concatenate([np.zeros(ut.shape[:-1] + (1,)), ut[..., :-1]], axis=-1)
    s = np.sum(D ** (t / q) * (ut - prev), axis=-1)
    return (q / t * s) ** (1.0 / t)


def lorentz_norm(f, q, t, w=None):
    """Weighted Lorentz L^{q,t} quasi-norm, exact for the step distribution function."""
    if not q > 0:
        raise ValueError("q must be positive")
    u = np.abs(f.values).ravel()
    ww = _cell_weights(f, w)
    order = np.argsort(u, kind="stable")
    u, ww = u[order], ww[order]
    D = np.cumsum(ww[::-1])[::-1]
    return float(_lorentz_sorted(u, D, q, t))


def lorentz_morrey_norm(f, q, t, theta, balls):
    """max over family balls B(x, r) of r^((theta - n)/q) ||f 1_B||_{L^{q,t}}."""
    if not (0 < theta <= f.dim):
        raise ValueError("theta must lie in (0, n]")
    if not (f.lo == balls.lo and f.hi == balls.hi and f.h == balls.h):
        raise GridMismatch("family and function grids differ")
    P = np.abs(balls.embed(f.values))
    cy, cx = balls.padded_centers()
    hv = f.cell_volume
    best = 0.0
    for k, r in enumerate(balls.radii):
        off = balls.offsets(k)
        m = len(off)
        D = hv * np.arange(m, 0, -1, dtype=float)
        scale = r ** ((theta - f.dim) / q)
        # chunk the centre axis to bound memory
        step = max(1, 2_000_000 // m)
        for s0 in range(0, len(cy), step):
            ys = cy[s0:s0 + step, None] + off[None, :, 0]
            xs = cx[s0:s0 + step, None] + off[None, :, 1]
            U = np.sort(P[ys, xs], axis=1)
            vals = _lorentz_sorted(U, D, q, t)
            best = max(best, float(np.max(vals)) * scale)
    return best


def morrey_norm(f, q, theta, balls):
    """Morrey norm: the Lorentz-Morrey norm with t = q."""
    return lorentz_morrey_norm(f, q, q, theta, balls)


def variable_modular(f, p):
    """Sum of |f|^p(x) h^n over cells."""
    if not f.same_grid(p.field):
        raise GridMismatch("exponent field and function grids differ")
    return float(np.sum(np.abs(f.values) ** p.field.values) * f.cell_volume)


def variable_norm(f, p, rtol=1e-12):
    """Luxembourg-Nakano norm inf{lam : modular(f/lam) <= 1}."""
    if not f.same_grid(p.field):
        raise GridMismatch("exponent field and function grids differ")
    a = np.abs(f.values)
    if not np.any(a > 0):
        return 0.0
    pv = p.field.values
    hv = f.cell_volume

    def modular(lam):
        with np.errstate(over="ignore"):
            return float(np.sum((a / lam) ** pv) * hv)

    return gauge(modular, float(np.max(a)), rtol)
