"""Whitney-type ball covers of proper open cell sets.

Distances are measured between cell centres: ``d(x)`` is the distance from
``x`` to the nearest centre of a cell of the box outside Omega. Every ball
has radius ``d(x)/3``, so its double misses the complement and its quadruple
meets it.

Balls are first placed at the centres of the maximal dyadic Whitney cubes
(largest first), skipping any whose quarter ball would meet an earlier one.
Cells of Omega not yet covered are then visited by decreasing ``d``; each
gets its own ball. A new centre x lies outside every earlier ball B_i, and
since ``d`` is 1-Lipschitz, |x - x_i| >= r_i implies the quarter balls are
disjoint.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import Empty, NotProper
from .grid import Ball, GridFunction, cells_in_ball

__all__ = ["WhitneyCover", "CoverReport", "whitney_decompose", "verify_cover", "omega_mask"]


@dataclass(frozen=True, eq=False)
class WhitneyCover:
    """Balls covering the cell set ``omega`` (boolean mask on the box grid)."""

    balls: list
    omega: np.ndarray = field(repr=False)
    lo: tuple
    hi: tuple
    h: float
    overlap: int = 0

    @property
    def dim(self):
        return len(self.lo)

    def to_csv(self):
        buf = io.StringIO()
        names = ["x", "y"][:self.dim]
        buf.write(",".join(names + ["radius"]) + "\n")
        for b in self.balls:
            buf.write(",".join(format(v, ".17g") for v in b.center + (b.radius,)) + "\n")
        return buf.getvalue()


@dataclass
class CoverReport:
    """Outcome of :func:`verify_cover`.

    ``covers`` and ``disjoint`` make up property (i), ``separated`` is
    property (ii) (every 2B inside Omega, every 4B meeting the complement)
    and ``overlap`` is the largest number of doubled balls containing a cell.
    """

    covers: bool
    disjoint: bool
    separated: bool
    overlap: int
    overlap_ok: bool
    uncovered: int = 0
    bad_balls: list = field(default_factory=list)

    @property
    def passed(self):
        return self.covers and self.disjoint and self.separated and self.overlap_ok

    @property
    def flags(self):
        return (self.covers and self.disjoint, self.separated, self.overlap_ok)


def omega_mask(fn, lo, hi, h):
    """Boolean cell mask of {x : fn(x)} sampled at cell centres."""
    g = GridFunction.zeros(lo, hi, h)
    return np.asarray(np.broadcast_to(fn(*g.centers()), g.shape), dtype=bool)


def _grid(omega, box, h):
    lo, hi = box
    g = GridFunction.zeros(lo, hi, h)
    if isinstance(omega, GridFunction):
        g.check_same_grid(omega)
        omega = omega.values != 0
    omega = np.asarray(omega, dtype=bool)
    if omega.shape != g.shape:
        raise ValueError("omega mask does not match the grid")
    return g, omega


def _cube_distance(tree, comp, mids, s, bound):
    """Distance from each closed cube (centre ``mids``, side ``s``) to the
    complement centres, exact wherever it is below ``bound``."""
    half = s / 2
    out = np.full(len(mids), np.inf)
    for i, near in enumerate(tree.query_ball_point(mids, bound + half * math.sqrt(mids.shape[1]))):
        if near:
            gap = np.maximum(np.abs(comp[near] - mids[i]) - half, 0.0)
            out[i] = np.min(np.sqrt(np.sum(gap * gap, axis=1)))
    return out


def _dyadic_cubes(g, tree, comp):
    """Maximal dyadic cubes Q of the box with diam Q <= dist(Q, complement)
    <= 4 diam Q, largest first. Returns their centres."""
    n = g.dim
    taken = np.zeros(g.shape, dtype=bool)
    side_cells = min(g.shape)
    out = []
    j = int(math.floor(math.log2(side_cells)))
    while j >= 0:
        k = 2 ** j
        s = g.h * k
        diam = s * math.sqrt(n)
        counts = [m // k for m in g.shape]
        idx = np.stack([c.ravel() for c in np.meshgrid(*[np.arange(c) for c in counts],
                                                      indexing="ij")], axis=1)
        if len(idx):
            # skip cubes inside an accepted larger cube (dyadic nesting)
            idx = idx[~taken[tuple((idx * k).T)]]
            mids = np.asarray(g.lo) + (idx + 0.5) * s
            dmid, _ = tree.query(mids)
            # dist(Q) lies in [dmid - diam/2, dmid]; resolve only the unclear cubes
            maybe = (dmid >= diam) & (dmid - diam / 2 <= 4 * diam)
            idx, mids = idx[maybe], mids[maybe]
            dist = _cube_distance(tree, comp, mids, s, 4 * diam)
            ok = (dist >= diam) & (dist <= 4 * diam)
            for q, m in zip(idx[ok], mids[ok]):
                sl = tuple(slice(q[a] * k, (q[a] + 1) * k) for a in range(n))
                taken[sl] = True
                out.append(m)
        j -= 1
    return out


def whitney_decompose(omega, box, h):
    """Whitney-type cover of the cell set ``omega`` on the grid of ``box``.

    Parameters
    ----------
    omega : array of bool or GridFunction
        Cell mask of the open set.
    box : (lo, hi)
    h : float

    Raises
    ------
    Empty
        If ``omega`` has no cell.
    NotProper
        If ``omega`` is the whole box.
    """
    g, om = _grid(omega, box, h)
    if not om.any():
        raise Empty("omega is empty")
    if om.all():
        raise NotProper("omega has no complement in the box")
    pts = g.points()
    inside = om.ravel()
    comp = pts[~inside]
    tree = cKDTree(comp)

    cand = _dyadic_cubes(g, tree, comp)
    n_cube = len(cand)
    cell_pts = pts[inside]
    d_cells, _ = tree.query(cell_pts)
    order = np.argsort(-d_cells, kind="stable")
    cand = np.concatenate([np.reshape(cand, (-1, g.dim)), cell_pts[order]])
    d_all = np.concatenate([tree.query(cand[:n_cube])[0] if n_cube else np.empty(0),
                            d_cells[order]])

    centers = np.empty((len(cand), g.dim))
    radii = np.empty(len(cand))
    m = 0
    for i, (x, d) in enumerate(zip(cand, d_all)):
        r = d / 3
        if m:
            gap = np.sqrt(np.sum((centers[:m] - x) ** 2, axis=1))
            if i < n_cube:
                # cube balls: keep quarter balls disjoint
                if np.any(gap < (r + radii[:m]) / 4):
                    continue
            elif np.any(gap < radii[:m]):
                # cells already covered need no ball
                continue
        centers[m] = x
        radii[m] = r
        m += 1
    balls = [Ball(tuple(centers[i]), float(radii[i])) for i in range(m)]
    cover = WhitneyCover(balls, om, g.lo, g.hi, g.h)
    object.__setattr__(cover, "overlap", int(_overlap_counts(cover).max()))
    return cover


def _in_box(idx, shape):
    ok = np.ones(len(idx), dtype=bool)
    for a, n in enumerate(shape):
        ok &= (idx[:, a] >= 0) & (idx[:, a] < n)
    return idx[ok]


def _overlap_counts(cover, scale=2.0):
    counts = np.zeros(cover.omega.shape, dtype=np.int64)
    for b in cover.balls:
        idx = _in_box(cells_in_ball(cover.lo, cover.h, b.scaled(scale)), counts.shape)
        counts[tuple(idx.T)] += 1
    return counts


def verify_cover(cover, max_overlap=None):
    """Check the covering properties on the cells of the box.

    Property (ii) is tested against the complement cells inside the box.
    ``max_overlap`` (None: no bound) sets the pass threshold for the
    observed overlap.
    """
    om = cover.omega
    hit = np.zeros(om.shape, dtype=bool)
    bad = []
    n_out = np.count_nonzero(~om)
    for i, b in enumerate(cover.balls):
        idx = _in_box(cells_in_ball(cover.lo, cover.h, b), om.shape)
        hit[tuple(idx.T)] = True
        in2 = _in_box(cells_in_ball(cover.lo, cover.h, b.scaled(2)), om.shape)
        in4 = _in_box(cells_in_ball(cover.lo, cover.h, b.scaled(4)), om.shape)
        two_inside = bool(np.all(om[tuple(in2.T)]))
        four_meets = n_out > 0 and bool(np.any(~om[tuple(in4.T)]))
        if not (two_inside and four_meets):
            bad.append(i)
    uncovered = int(np.count_nonzero(om & ~hit))
    c = np.array([b.center for b in cover.balls]).reshape(-1, len(cover.lo))
    r = np.array([b.radius for b in cover.balls])
    disjoint = True
    for i in range(len(r) - 1):
        gap = np.sqrt(np.sum((c[i + 1:] - c[i]) ** 2, axis=1))
        if np.any(gap < (r[i + 1:] + r[i]) / 4):
            disjoint = False
            break
    N = int(_overlap_counts(cover).max()) if cover.balls else 0
    ok = True if max_overlap is None else N <= max_overlap
    return CoverReport(uncovered == 0, disjoint, not bad, N, ok, uncovered, bad)
