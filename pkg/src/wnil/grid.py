"""Uniform cell-centred grids on boxes in R^1 and R^2, balls and ball families.

Cell ``i`` (per axis) of a grid with lower corner ``lo`` and spacing ``h`` has
its centre at ``lo + (i + 1/2) h``. Indices outside ``[0, N)`` refer to the
same lattice continued past the box, where every GridFunction vanishes.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BadPolicy, EmptyBall, GridMismatch, NonFiniteWeight

__all__ = [
    "GridFunction", "Ball", "BallPolicy", "BallFamily", "ball_family",
    "average_over_ball", "integrate", "distribution_measure", "cells_in_ball",
    "ball_offsets",
]


def _counts(lo, hi, h):
    counts = []
    for a, b in zip(lo, hi):
        n = int(round((b - a) / h))
        if n < 1 or abs(n * h - (b - a)) > 1e-9 * max(1.0, abs(b - a)):
            raise GridMismatch(f"box side {b - a} is not a multiple of h={h}")
        counts.append(n)
    return tuple(counts)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values at the cell centres of a uniform grid on a box.

    Parameters
    ----------
    lo, hi : tuple of float
        Lower and upper box corners, one entry per axis (1 or 2 axes).
    h : float
        Grid spacing, equal on every axis.
    values : array_like
        Values with shape equal to the per-axis cell counts (a flat array of
        the right length is reshaped in row-major order).
    """

    lo: tuple
    hi: tuple
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise GridMismatch("dimension must be 1 or 2")
        h = float(self.h)
        if not h > 0:
            raise GridMismatch("h must be positive")
        shape = _counts(lo, hi, h)
        vals = np.array(self.values, dtype=float).reshape(shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("GridFunction values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, lo, hi, h):
        lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)
        return cls(lo, hi, h, np.zeros(_counts(lo, hi, float(h))))

    @classmethod
    def from_function(cls, fn, lo, hi, h):
        """Sample ``fn`` at the cell centres; ``fn`` receives one array per axis."""
        g = cls.zeros(lo, hi, h)
        return g.with_values(np.broadcast_to(fn(*g.centers()), g.shape))

    @property
    def dim(self):
        return len(self.lo)

    @property
    def shape(self):
        return self.values.shape

    @property
    def cell_volume(self):
        return self.h ** self.dim

    @property
    def diameter(self):
        return math.dist(self.lo, self.hi)

    def axis_centers(self, axis):
        n = self.shape[axis]
        return self.lo[axis] + (np.arange(n) + 0.5) * self.h

    def centers(self):
        """Cell-centre coordinate arrays (``ij`` meshgrid), one per axis."""
        axes = [self.axis_centers(a) for a in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")

    def points(self):
        """Cell centres as an (N, dim) array in row-major order."""
        return np.stack([c.ravel() for c in self.centers()], axis=1)

    def with_values(self, values):
        return GridFunction(self.lo, self.hi, self.h, np.asarray(values, dtype=float))

    def same_grid(self, other):
        return (self.lo == other.lo and self.hi == other.hi
                and self.h == other.h)

    def check_same_grid(self, other):
        if not self.same_grid(other):
            raise GridMismatch("grid functions live on different grids")

    def abs(self):
        return self.with_values(np.abs(self.values))

    def __add__(self, other):
        self.check_same_grid(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self.check_same_grid(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            self.check_same_grid(c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def index_of(self, x):
        """Integer lattice index of the cell containing point ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return tuple(int(math.floor((x[a] - self.lo[a]) / self.h)) for a in range(self.dim))

    def value_at(self, x):
        idx = self.index_of(x)
        if all(0 <= i < n for i, n in zip(idx, self.shape)):
            return float(self.values[idx])
        return 0.0

    # serialization -----------------------------------------------------
    def to_csv(self):
        buf = io.StringIO()
        head = [str(self.dim)] + [format(v, ".17g") for v in self.lo + self.hi + (self.h,)]
        buf.write(",".join(head) + "\n")
        for v in self.values.ravel():
            buf.write(format(float(v), ".17g") + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split(",")
        dim = int(head[0])
        nums = [float(v) for v in head[1:]]
        if len(nums) != 2 * dim + 1:
            raise ValueError("malformed GridFunction header")
        lo, hi, h = nums[:dim], nums[dim:2 * dim], nums[2 * dim]
        vals = np.array([float(v) for v in lines[1:]])
        return cls(lo, hi, h, vals)

    def to_json(self):
        return json.dumps({"dim": self.dim, "box_lo": list(self.lo), "box_hi": list(self.hi),
                           "h": self.h, "values": self.values.ravel().tolist()})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text) if isinstance(text, str) else text
        return cls(d["box_lo"], d["box_hi"], d["h"], np.array(d["values"], dtype=float))


@dataclass(frozen=True)
class Ball:
    """Open ball B(center, radius)."""

    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def scaled(self, a):
        return Ball(self.center, a * self.radius)

    @property
    def dim(self):
        return len(self.center)

    def measure(self):
        r = self.radius
        return 2 * r if self.dim == 1 else math.pi * r * r


def cells_in_ball(lo, h, ball):
    """Lattice indices (possibly outside the box) of cell centres inside ``ball``.

    Returns an (m, dim) integer array.
    """
    dim = len(lo)
    rng = []
    for a in range(dim):
        c = (ball.center[a] - lo[a]) / h - 0.5
        rr = ball.radius / h
        rng.append(np.arange(math.floor(c - rr) - 1, math.ceil(c + rr) + 2))
    grids = np.meshgrid(*rng, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    pts = np.asarray(lo) + (idx + 0.5) * h
    d2 = np.sum((pts - np.asarray(ball.center)) ** 2, axis=1)
    return idx[d2 < ball.radius ** 2]


def _inside(f, idx):
    ok = np.ones(len(idx), dtype=bool)
    for a, n in enumerate(f.shape):
        ok &= (idx[:, a] >= 0) & (idx[:, a] < n)
    return ok


def average_over_ball(f, ball):
    """Mean of ``f`` over the cell centres in ``ball`` (zero outside the box)."""
    idx = cells_in_ball(f.lo, f.h, ball)
    if len(idx) == 0:
        raise EmptyBall(f"no cell centre lies in {ball}")
    ok = _inside(f, idx)
    vals = f.values[tuple(idx[ok].T)]
    return float(np.sum(vals)) / len(idx)


def _weight_values(f, weight):
    if weight is None:
        return np.ones(f.shape)
    w = np.asarray(weight.evaluate(f.points(), f.h), dtype=float).reshape(f.shape)
    if not np.all(np.isfinite(w)):
        raise NonFiniteWeight("weight is not finite at some cell centre")
    return w


def integrate(f, weight=None):
    """Midpoint rule for the integral of ``f`` times the weight over the box."""
    w = _weight_values(f, weight)
    return float(np.sum(f.values * w) * f.cell_volume)


def distribution_measure(f, w, lam):
    """Weighted measure of ``{|f| > lam}``, cell by cell."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    wv = _weight_values(f, w)
    return float(np.sum(wv[np.abs(f.values) > lam]) * f.cell_volume)


# ball families -----------------------------------------------------------

def ball_offsets(rho, dim):
    """Integer offsets m with |m| < rho, in lexicographic order.

    ``rho`` is the radius in units of h. Values within 1e-9 of an integer are
    snapped so that dyadic radii give exact integer comparisons.
    """
    if abs(rho - round(rho)) < 1e-9:
        rho = float(round(rho))
    m = int(math.ceil(rho))
    ax = np.arange(-m, m + 1)
    if dim == 1:
        off = ax[np.abs(ax) < rho]
        return np.stack([np.zeros_like(off), off], axis=1)
    a, b = np.meshgrid(ax, ax, indexing="ij")
    keep = a * a + b * b < rho * rho
    return np.stack([a[keep], b[keep]], axis=1)


@dataclass(frozen=True)
class BallPolicy:
    """How to build a ball family.

    Parameters
    ----------
    stride : int
        Centres are every ``stride``-th cell centre along each axis.
    K : int or None
        Radii are ``h * 2**k`` for k = 0..K. None takes the largest K allowed
        by ``max_radius_factor``.
    max_radius_factor : float
        Radii are capped at this multiple of the box diameter.
    per_octave : int
        Radii per doubling. The default 1 gives the dyadic ladder; ``m > 1``
        uses ``h * 2**(j/m)``, which still contains every dyadic radius.
    """

    stride: int = 1
    K: int | None = None
    max_radius_factor: float = 1.0
    per_octave: int = 1


@dataclass(frozen=True, eq=False)
class BallFamily:
    """Balls centred at (strided) cell centres with radii h 2^(j/per_octave)."""

    lo: tuple
    hi: tuple
    h: float
    stride: int
    radii: tuple
    center_idx: np.ndarray = field(repr=False)
    per_octave: int = 1

    @property
    def dim(self):
        return len(self.lo)

    @property
    def shape(self):
        return _counts(self.lo, self.hi, self.h)

    @property
    def n_centers(self):
        return len(self.center_idx)

    @property
    def size(self):
        return self.n_centers * len(self.radii)

    @property
    def max_radius(self):
        return max(self.radii)

    @cached_property
    def pad(self):
        """Cells of padding needed so every ball fits in the padded lattice."""
        return int(math.ceil(self.max_radius / self.h)) + 1

    def offsets(self, k):
        return ball_offsets(self.radii[k] / self.h, self.dim)

    def center_point(self, i):
        return tuple(self.lo[a] + (self.center_idx[i, a] + 0.5) * self.h for a in range(self.dim))

    def ball(self, i, k):
        return Ball(self.center_point(i), self.radii[k])

    def ball_id(self, i, k):
        return k * self.n_centers + i

    def ball_from_id(self, bid):
        k, i = divmod(int(bid), self.n_centers)
        return self.ball(i, k)

    def balls(self):
        for k in range(len(self.radii)):
            for i in range(self.n_centers):
                yield self.ball(i, k)

    def truncated(self, K):
        """The sub-family made of the first ``K + 1`` radii."""
        return BallFamily(self.lo, self.hi, self.h, self.stride, self.radii[:K + 1], self.center_idx,
                          self.per_octave)

    def padded_centers(self):
        """Centre indices in the padded 2-D layout used by the kernels."""
        p = self.pad
        if self.dim == 1:
            return np.zeros(self.n_centers, dtype=np.intp), self.center_idx[:, 0] + p
        return self.center_idx[:, 0] + p, self.center_idx[:, 1] + p

    def embed(self, values, fill=0.0):
        """Place box values into a zero (or ``fill``) padded 2-D array."""
        p = self.pad
        v = np.asarray(values, dtype=float)
        if self.dim == 1:
            out = np.full((1, v.shape[0] + 2 * p), fill)
            out[0, p:p + v.shape[0]] = v
        else:
            out = np.full((v.shape[0] + 2 * p, v.shape[1] + 2 * p), fill)
            out[p:p + v.shape[0], p:p + v.shape[1]] = v
        return out

    def crop(self, padded):
        p = self.pad
        n = self.shape
        if self.dim == 1:
            return padded[0, p:p + n[0]]
        return padded[p:p + n[0], p:p + n[1]]

    def padded_points(self):
        """Cell-centre coordinates of the padded lattice, one array per axis (2-D layout)."""
        p = self.pad
        n = self.shape
        axes = [self.lo[a] + (np.arange(-p, n[a] + p) + 0.5) * self.h for a in range(self.dim)]
        if self.dim == 1:
            return [axes[0][None, :]]
        return np.meshgrid(*axes, indexing="ij")

    def represents(self, ball):
        """Whether ``ball`` has a centre on this grid's half-cell lattice inside the
        box and a radius on the ladder ``h 2^(j/per_octave)`` within the family's range."""
        for a in range(self.dim):
            c = ball.center[a]
            if not (self.lo[a] <= c <= self.hi[a]):
                return False
            j = (c - self.lo[a]) / (self.h / 2)
            if abs(j - round(j)) > 1e-9:
                return False
        k = math.log2(ball.radius / self.h) * self.per_octave
        return abs(k - round(k)) < 1e-9 and 0 <= round(k) and ball.radius <= self.max_radius * (1 + 1e-12)


def ball_family(box, h, policy=BallPolicy()):
    """Build the family of balls centred at strided cell centres with radii h 2^k.

    Parameters
    ----------
    box : (lo, hi)
        Box corners.
    h : float
        Grid spacing.
    policy : BallPolicy
    """
    lo = tuple(float(v) for v in np.atleast_1d(box[0]))
    hi = tuple(float(v) for v in np.atleast_1d(box[1]))
    shape = _counts(lo, hi, h)
    if policy.stride < 1:
        raise BadPolicy("stride must be >= 1")
    m = policy.per_octave
    if m < 1:
        raise BadPolicy("per_octave must be >= 1")
    diam = math.dist(lo, hi)
    cap = policy.max_radius_factor * diam
    if policy.K is None:
        K = int(math.floor(m * math.log2(cap / h) + 1e-9)) if cap >= h else -1
    else:
        K = m * policy.K
    radii = tuple(h * 2.0 ** (j / m) for j in range(K + 1) if h * 2.0 ** (j / m) <= cap * (1 + 1e-12))
    if not radii:
        raise BadPolicy("radius set is empty")
    axes = [np.arange(0, n, policy.stride) for n in shape]
    grids = np.meshgrid(*axes, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1).astype(np.intp)
    return BallFamily(lo, hi, float(h), policy.stride, radii, idx, m)
