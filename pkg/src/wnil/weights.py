"""Weights and the weight-class constants A_q, RH_s, two-weight A_p, S_p and bumps.

Pointwise evaluation (``eval_weight``, ``WeightSpec.evaluate``) samples the
weight at cell centres, with the singular point of a negative power clamped
to distance h/2. The constants over ball families use the exact mean of
``w**e`` over each cell instead, so a power that is not locally integrable
gives an infinite average rather than a grid-dependent large number.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sint

from . import kernels
from .errors import DegenerateBall, GridMismatch, ZeroAverage, ZeroMass
from .grid import GridFunction

__all__ = [
    "Constant", "Power", "TruncatedPower", "Tabulated", "weight_from_json",
    "eval_weight", "cell_means", "WeightConstantReport", "ap_constant",
    "rh_constant", "two_weight_ap", "sawyer_sp", "bump_constant",
    "power_weight_membership", "growth_factors",
]


# radial profiles -----------------------------------------------------------

def _pow_int(u0, u1, p):
    """Integral of u**p over [u0, u1] with 0 <= u0 <= u1 (vectorized)."""
    u0, u1 = np.broadcast_arrays(np.asarray(u0, float), np.asarray(u1, float))
    out = np.zeros(u0.shape)
    pos = u1 > u0
    at0 = pos & (u0 == 0)
    away = pos & (u0 > 0)
    if p > -1:
        out[at0] = u1[at0] ** (p + 1) / (p + 1)
    else:
        out[at0] = np.inf
    a, b = u0[away], u1[away]
    lg = np.log1p((b - a) / a)
    if p == -1:
        out[away] = lg
    else:
        out[away] = a ** (p + 1) * np.expm1((p + 1) * lg) / (p + 1)
    return out


class _Radial:
    """g(d) = piecewise power/constant profile of the distance d = |x - z|.

    ``pieces`` is a list of (start, end, kind, value) with kind "pow"
    (g = d**value) or "const" (g = value).
    """

    def __init__(self, pieces):
        self.pieces = pieces

    def __call__(self, d):
        d = np.asarray(d, float)
        out = np.zeros(d.shape)
        for s, t, kind, val in self.pieces:
            m = (d >= s) & (d < t)
            if kind == "pow":
                with np.errstate(divide="ignore"):
                    out[m] = d[m] ** val
            else:
                out[m] = val
        return out

    def int1d(self, u0, u1):
        """Integral of g(u) du over [u0, u1], 0 <= u0 <= u1."""
        total = np.zeros(np.broadcast(u0, u1).shape)
        for s, t, kind, val in self.pieces:
            a = np.clip(u0, s, t)
            b = np.clip(u1, s, t)
            if kind == "pow":
                total = total + _pow_int(a, b, val)
            else:
                total = total + val * (b - a)
        return total

    def Q(self, rho):
        """Integral of g(s) s ds over [0, rho] (scalar)."""
        total = 0.0
        for s, t, kind, val in self.pieces:
            a, b = min(max(0.0, s), rho), min(t, rho)
            if b <= a:
                continue
            if kind == "pow":
                total += float(_pow_int(a, b, val + 1))
            else:
                total += val * (b * b - a * a) / 2
        return total


def _interval_integral(rad, a, b, z):
    """Integral of g(|x - z|) over [a, b] (vectorized in a, b)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    out = np.zeros(np.broadcast(a, b).shape)
    right = a >= z
    left = b <= z
    mid = ~(right | left)
    out[right] = rad.int1d(a[right] - z, b[right] - z)
    out[left] = rad.int1d(z - b[left], z - a[left])
    out[mid] = rad.int1d(0.0, z - a[mid]) + rad.int1d(0.0, b[mid] - z)
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _fan_square(rad, x0, y0, h, z):
    """Integral of g(|x - z|) over the square [x0, x0+h] x [y0, y0+h], z in its closure."""
    corners = [(x0, y0), (x0 + h, y0), (x0 + h, y0 + h), (x0, y0 + h)]
    total = 0.0
    for k in range(4):
        (ax, ay), (bx, by) = corners[k], corners[(k + 1) % 4]
        pa = (ax - z[0], ay - z[1])
        pb = (bx - z[0], by - z[1])
        cross = pa[0] * pb[1] - pa[1] * pb[0]
        if abs(cross) < 1e-15 * h * h:
            continue
        th_a = math.atan2(pa[1], pa[0])
        th_b = math.atan2(pb[1], pb[0])
        dth = (th_b - th_a + math.pi) % (2 * math.pi) - math.pi
        # distance from z to the edge line and the direction of its normal
        ex, ey = bx - ax, by - ay
        le = math.hypot(ex, ey)
        dperp = abs(cross) / le
        nx, ny = ey / le, -ex / le
        if nx * pa[0] + ny * pa[1] < 0:
            nx, ny = -nx, -ny
        th_n = math.atan2(ny, nx)
        Q0 = rad.Q(1.0)  # probe finiteness at the apex
        if not math.isfinite(Q0):
            return math.inf

        def integrand(th):
            c = math.cos(th - th_n)
            return rad.Q(dperp / c)

        lo_, hi_ = (th_a, th_a + dth) if dth > 0 else (th_a + dth, th_a)
        val, _ = sint.quad(integrand, lo_, hi_, epsabs=0, epsrel=1e-12, limit=200)
        total += math.copysign(val, cross)
    return abs(total)


def _square_gl(rad, x0, y0, h, z, sub):
    """Tensor Gauss-Legendre integral over squares with ``sub`` x ``sub`` subcells."""
    s = h / sub
    off = (np.arange(sub)[:, None] * s + (_GL_X[None, :] + 1) * s / 2).ravel()
    wts = np.tile(_GL_W * s / 2, sub)
    X = x0[:, None, None] + off[None, :, None]
    Y = y0[:, None, None] + off[None, None, :]
    d = np.hypot(X - z[0], Y - z[1])
    vals = rad(d)
    return np.einsum("nij,i,j->n", vals, wts, wts)


# weight variants ---------------------------------------------------------

def _as_point(z):
    return tuple(float(v) for v in np.atleast_1d(z))


@dataclass(frozen=True)
class Constant:
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("Constant weight needs c > 0")

    def evaluate(self, points, h=None):
        return np.full(len(np.atleast_2d(points)), float(self.c))

    def radial(self, e):
        return None

    def to_dict(self):
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class Power:
    """|x - z|**gamma."""

    gamma: float
    center: tuple = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not self.gamma > -len(self.center):
            raise ValueError("Power weight needs gamma > -n")

    def evaluate(self, points, h=None):
        pts = np.atleast_2d(np.asarray(points, float))
        d = np.sqrt(np.sum((pts - np.asarray(self.center)) ** 2, axis=1))
        if self.gamma < 0:
            clamp = (h / 2) if h is not None else 0.0
            d = np.where(d == 0, clamp, d)
        with np.errstate(divide="ignore"):
            return d ** self.gamma

    def radial(self, e):
        return _Radial([(0.0, math.inf, "pow", self.gamma * e)])

    def to_dict(self):
        return {"kind": "power", "gamma": self.gamma, "center": list(self.center)}


@dataclass(frozen=True)
class TruncatedPower:
    """min(|x - z|**a, r**a)."""

    a: float
    center: tuple
    r: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not self.r > 0:
            raise ValueError("TruncatedPower needs r > 0")

    def evaluate(self, points, h=None):
        pts = np.atleast_2d(np.asarray(points, float))
        d = np.sqrt(np.sum((pts - np.asarray(self.center)) ** 2, axis=1))
        with np.errstate(divide="ignore"):
            return np.minimum(d ** self.a, self.r ** self.a)

    def radial(self, e):
        a, r = self.a, self.r
        cap = r ** (a * e)
        if a == 0:
            return _Radial([(0.0, math.inf, "const", 1.0)])
        if a < 0:
            return _Radial([(0.0, r, "const", cap), (r, math.inf, "pow", a * e)])
        return _Radial([(0.0, r, "pow", a * e), (r, math.inf, "const", cap)])

    def to_dict(self):
        return {"kind": "truncated_power", "a": self.a, "center": list(self.center), "r": self.r}


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Cell values of a GridFunction; ``fill`` outside its box."""

    table: GridFunction
    fill: float = 0.0

    def __post_init__(self):
        v = self.table.values
        if np.any(v < 0) or not np.any(v > 0):
            raise ValueError("Tabulated weight needs values >= 0, not all zero")
        if self.fill < 0:
            raise ValueError("fill must be >= 0")

    def evaluate(self, points, h=None):
        pts = np.atleast_2d(np.asarray(points, float))
        t = self.table
        idx = np.floor((pts - np.asarray(t.lo)) / t.h).astype(int)
        ok = np.all((idx >= 0) & (idx < np.asarray(t.shape)), axis=1)
        out = np.full(len(pts), float(self.fill))
        out[ok] = t.values[tuple(idx[ok].T)]
        return out

    def radial(self, e):
        return None

    def to_dict(self):
        return {"kind": "tabulated", "table": json.loads(self.table.to_json()), "fill": self.fill}


def weight_from_json(spec):
    """Build a weight from its JSON description (str or dict)."""
    d = json.loads(spec) if isinstance(spec, str) else dict(spec)
    kind = d.get("kind")
    if kind == "constant":
        return Constant(float(d.get("c", 1.0)))
    if kind == "power":
        return Power(float(d["gamma"]), tuple(d.get("center", [0.0])))
    if kind == "truncated_power":
        return TruncatedPower(float(d["a"]), tuple(d["center"]), float(d["r"]))
    if kind == "tabulated":
        return Tabulated(GridFunction.from_json(d["table"]), float(d.get("fill", 0.0)))
    raise ValueError(f"unknown weight kind {kind!r}")


def eval_weight(w, x, h=None):
    """Value of the weight at point ``x``; ``h`` sets the singularity clamp."""
    return float(w.evaluate(np.atleast_2d(np.asarray(x, float)), h)[0])


# exact cell means ---------------------------------------------------------

def cell_means(w, axes, h, e=1.0):
    """Mean of ``w**e`` over each cell of a lattice.

    Parameters
    ----------
    w : weight
    axes : list of arrays
        Cell-centre coordinates, one (broadcastable) array per axis.
    h : float
    e : float
        Exponent applied before averaging.
    """
    shape = np.broadcast(*axes).shape
    if isinstance(w, Constant):
        return np.full(shape, float(w.c) ** e)
    if isinstance(w, Tabulated):
        pts = np.stack([np.broadcast_to(a, shape).ravel() for a in axes], axis=1)
        t = w.table
        if abs(t.h - h) > 1e-12 * h:
            raise GridMismatch("tabulated weight spacing differs from the lattice")
        rel = (pts - np.asarray(t.lo)) / h - 0.5
        if np.max(np.abs(rel - np.round(rel))) > 1e-6:
            raise GridMismatch("tabulated weight is not aligned with the lattice")
        vals = w.evaluate(pts, h)
        with np.errstate(divide="ignore"):
            return np.power(vals, e).reshape(shape)
    rad = w.radial(e)
    z = w.center
    dim = len(axes)
    if dim == 1:
        x = np.broadcast_to(axes[0], shape)
        return _interval_integral(rad, x - h / 2, x + h / 2, z[0]) / h
    X = np.broadcast_to(axes[0], shape).ravel()
    Y = np.broadcast_to(axes[1], shape).ravel()
    x0, y0 = X - h / 2, Y - h / 2
    out = np.empty(X.shape)
    dx = np.maximum(np.maximum(x0 - z[0], z[0] - (x0 + h)), 0)
    dy = np.maximum(np.maximum(y0 - z[1], z[1] - (y0 + h)), 0)
    dist = np.hypot(dx, dy)
    touching = dist <= 1e-12 * h
    near = ~touching & (dist < 3 * h)
    far = ~(touching | near)
    if far.any():
        out[far] = _square_gl(rad, x0[far], y0[far], h, z, 1)
    if near.any():
        out[near] = _square_gl(rad, x0[near], y0[near], h, z, 4)
    for i in np.flatnonzero(touching):
        out[i] = _fan_square(rad, x0[i], y0[i], h, z)
    return out.reshape(shape) / (h * h)


# reports ---------------------------------------------------------------

@dataclass
class WeightConstantReport:
    """Maximum of a per-ball quantity over a family, with its refinement series."""

    constant: float
    family_size: int
    max_radius: float
    argmax_center: tuple
    argmax_radius: float
    series: list = field(default_factory=list)
    name: str = ""

    @property
    def infinite(self):
        return math.isinf(self.constant)

    def rows(self):
        return list(self.series)

    def to_csv(self):
        lines = ["family_size,max_radius,constant,argmax_center,argmax_radius"]
        for r in self.series:
            c = " ".join(format(v, ".17g") for v in r["argmax_center"])
            lines.append(f"{r['family_size']},{r['max_radius']!r},{r['constant']!r},{c},{r['argmax_radius']!r}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"name": self.name, "constant": self.constant, "family_size": self.family_size,
                "max_radius": self.max_radius, "argmax_center": list(self.argmax_center),
                "argmax_radius": self.argmax_radius, "series": self.series}


def _report(fam, per_radius, name):
    """Assemble a report from per-radius arrays of per-centre values."""
    series = []
    best, best_k, best_i = -math.inf, 0, 0
    for k, vals in enumerate(per_radius):
        vals = np.asarray(vals, float)
        if np.any(np.isnan(vals)):
            raise DegenerateBall("undefined ball quantity (0 times infinity)")
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_k, best_i = float(vals[i]), k, i
        series.append({"family_size": (k + 1) * fam.n_centers, "max_radius": fam.radii[k],
                       "constant": best, "argmax_center": fam.center_point(best_i),
                       "argmax_radius": fam.radii[best_k]})
    return WeightConstantReport(best, fam.size, fam.max_radius, fam.center_point(best_i),
                                fam.radii[best_k], series, name)


def _padded_means(w, fam, e):
    return cell_means(w, fam.padded_points(), fam.h, e)


def _ball_means(fam, P):
    cy, cx = fam.padded_centers()
    out = []
    for k in range(len(fam.radii)):
        off = fam.offsets(k)
        out.append(kernels.stencil_sum(P, cy, cx, off[:, 0], off[:, 1]) / len(off))
    return out


def _ball_maxes(fam, P):
    cy, cx = fam.padded_centers()
    return [kernels.stencil_max(P, cy, cx, fam.offsets(k)[:, 0], fam.offsets(k)[:, 1])
            for k in range(len(fam.radii))]


def _dual_exponent(q):
    return -1.0 / (q - 1.0)


def _product(a, b, power):
    """a * b**power with 0 averages reported as degenerate."""
    if np.any(a == 0):
        raise DegenerateBall("weight average vanishes on a ball")
    with np.errstate(over="ignore"):
        return a * np.power(b, power)


def ap_constant(w, q, balls):
    """Muckenhoupt A_q constant of ``w`` over the family ``balls``."""
    if not q >= 1:
        raise ValueError("q must be >= 1")
    mw = _ball_means(balls, _padded_means(w, balls, 1.0))
    if q == 1:
        inv = _ball_maxes(balls, _padded_means(w, balls, -1.0))
        vals = [_product(a, b, 1.0) for a, b in zip(mw, inv)]
    else:
        mv = _ball_means(balls, _padded_means(w, balls, _dual_exponent(q)))
        vals = [_product(a, b, q - 1.0) for a, b in zip(mw, mv)]
    return _report(balls, vals, f"A_{q}")


def rh_constant(w, s, balls):
    """Reverse Hoelder RH_s constant; ``s`` may be ``math.inf``."""
    if not s > 1:
        raise ValueError("s must be > 1")
    mw = _ball_means(balls, _padded_means(w, balls, 1.0))
    if any(np.any(m == 0) for m in mw):
        raise ZeroAverage("weight average vanishes on some ball")
    if math.isinf(s):
        top = _ball_maxes(balls, _padded_means(w, balls, 1.0))
        vals = [t / m for t, m in zip(top, mw)]
    else:
        ms = _ball_means(balls, _padded_means(w, balls, s))
        vals = [np.power(a, 1.0 / s) / m for a, m in zip(ms, mw)]
    return _report(balls, vals, f"RH_{s}")


def two_weight_ap(w, v, p, balls):
    """Two-weight A_p constant (avg w)(avg v^(1-p'))^(p-1)."""
    if not p > 1:
        raise ValueError("p must be > 1")
    mw = _ball_means(balls, _padded_means(w, balls, 1.0))
    mv = _ball_means(balls, _padded_means(v, balls, _dual_exponent(p)))
    return _report(balls, [_product(a, b, p - 1.0) for a, b in zip(mw, mv)], f"A_{p}(w,v)")


def sawyer_sp(w, v, p, balls, maximal=None):
    """Sawyer testing constant for the pair (w, v) over the family.

    ``maximal`` maps a padded lattice array to its maximal function over the
    same family; the Hardy-Littlewood operator of :mod:`wnil.maximal` is the
    default.
    """
    if not p > 1:
        raise ValueError("p must be > 1")
    if maximal is None:
        from .maximal import padded_maximal

        def maximal(P):
            return padded_maximal(P, balls)[0]
    sigma = _padded_means(v, balls, _dual_exponent(p))
    wbar = _padded_means(w, balls, 1.0)
    cy, cx = balls.padded_centers()
    vals = []
    for k in range(len(balls.radii)):
        off = balls.offsets(k)
        row = np.empty(balls.n_centers)
        for i in range(balls.n_centers):
            ys, xs = cy[i] + off[:, 0], cx[i] + off[:, 1]
            g = np.zeros_like(sigma)
            g[ys, xs] = sigma[ys, xs]
            mass = float(np.sum(sigma[ys, xs]))
            if mass == 0:
                raise ZeroMass("v^(1-p') has zero mass on a ball")
            Mg = maximal(g)
            row[i] = (float(np.sum(Mg[ys, xs] ** p * wbar[ys, xs])) / mass) ** (1.0 / p)
        vals.append(row)
    return _report(balls, vals, f"S_{p}")


def bump_constant(w, v, phi, exponents, balls):
    """Orlicz bump constant (avg_B w) * ||v^(-inner)||_{phi,B}^outer.

    Parameters
    ----------
    exponents : (outer, inner)
        For the A_p-type bump use (p, 1/p); the two other shapes use
        (q/p2, p2/q) and (q/p2, p2/p).
    """
    from .young import luxembourg_rows

    outer, inner = exponents
    mw = _ball_means(balls, _padded_means(w, balls, 1.0))
    pts = balls.padded_points()
    shape = np.broadcast(*pts).shape
    flat = np.stack([np.broadcast_to(a, shape).ravel() for a in pts], axis=1)
    with np.errstate(divide="ignore"):
        g = np.power(v.evaluate(flat, balls.h), -inner).reshape(shape)
    cy, cx = balls.padded_centers()
    vals = []
    for k in range(len(balls.radii)):
        off = balls.offsets(k)
        rows = g[cy[:, None] + off[None, :, 0], cx[:, None] + off[None, :, 1]]
        norms = luxembourg_rows(rows, phi)
        vals.append(_product(mw[k], norms, outer))
    return _report(balls, vals, f"bump({phi})")


def power_weight_membership(gamma, s, n):
    """Whether |x|^gamma lies in A_s on R^n, i.e. -n < gamma < n (s - 1)."""
    if not s > 1:
        raise ValueError("s must be > 1")
    return -n < gamma < n * (s - 1)


def growth_factors(report):
    """Ratios of consecutive constants in a report's series (inf stays inf)."""
    c = [r["constant"] for r in report.series]
    out = []
    for a, b in zip(c[:-1], c[1:]):
        out.append(math.inf if math.isinf(b) else b / a)
    return out
