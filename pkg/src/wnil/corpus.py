"""Seeded test-function corpora.

Shapes are drawn in physical coordinates from a seeded generator before any
sampling, so the same seed gives the same functions at every grid spacing.
"""
from __future__ import annotations

import numpy as np

from .grid import GridFunction

__all__ = ["KINDS", "make_corpus", "bump", "indicator", "bandlimited", "symmetrize",
           "write_corpus"]

KINDS = ("bumps", "indicators", "bandlimited", "mixed")


def _r2(centers, c):
    return sum((x - a) ** 2 for x, a in zip(centers, c))


def bump(g, c, r, amp=1.0):
    """amp * exp(1 - 1/(1 - |x - c|^2/r^2)) inside B(c, r), zero outside."""
    u = _r2(g.centers(), c) / r ** 2
    inside = u < 1
    v = np.zeros(g.shape)
    v[inside] = amp * np.exp(1 - 1 / (1 - u[inside]))
    return g.with_values(v)


def indicator(g, lo, hi, amp=1.0):
    """amp times the indicator of the box [lo, hi] (closed), sampled at centres."""
    m = np.ones(g.shape, dtype=bool)
    for x, a, b in zip(g.centers(), lo, hi):
        m &= (x >= a) & (x <= b)
    return g.with_values(amp * m)


def bandlimited(g, c, sigma, freqs, phases, amps):
    """Gaussian-windowed sum of plane waves: smooth, essentially band-limited."""
    X = g.centers()
    env = np.exp(-_r2(X, c) / (2 * sigma ** 2))
    v = np.zeros(g.shape)
    for k, ph, a in zip(freqs, phases, amps):
        v += a * np.cos(sum(kk * x for kk, x in zip(k, X)) + ph)
    return g.with_values(env * v)


def symmetrize(f, sign):
    """(f(x) + sign f(2m - x)) / 2 with m the box midpoint (exact on the lattice)."""
    v = f.values[(slice(None, None, -1),) * f.dim]
    return f.with_values((f.values + sign * v) / 2)


def _draw(kind, rng, lo, hi):
    lo, hi = np.asarray(lo), np.asarray(hi)
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    if kind == "bumps":
        r = rng.uniform(0.1, 0.4) * half.min()
        c = mid + rng.uniform(-0.5, 0.5, size=len(lo)) * half
        return ("bump", tuple(c), float(r), float(rng.uniform(0.5, 2.0)))
    if kind == "indicators":
        c = mid + rng.uniform(-0.5, 0.5, size=len(lo)) * half
        w = rng.uniform(0.05, 0.4, size=len(lo)) * half
        return ("indicator", tuple(c - w), tuple(c + w), float(rng.uniform(0.5, 2.0)))
    if kind == "bandlimited":
        c = mid + rng.uniform(-0.3, 0.3, size=len(lo)) * half
        sigma = float(rng.uniform(0.08, 0.2) * half.min())
        nw = 3
        freqs = rng.normal(0.0, 1.5 / sigma, size=(nw, len(lo)))
        return ("bandlimited", tuple(c), sigma, [tuple(k) for k in freqs],
                list(rng.uniform(0, 2 * np.pi, nw)), list(rng.normal(0, 1, nw)))
    raise ValueError(f"unknown corpus kind {kind!r}")


def _realize(g, shape):
    tag = shape[0]
    if tag == "bump":
        return bump(g, *shape[1:])
    if tag == "indicator":
        return indicator(g, *shape[1:])
    return bandlimited(g, *shape[1:])


def make_corpus(kind, seed, count, lo, hi, h):
    """Deterministic list of ``count`` GridFunctions on the grid of [lo, hi].

    ``indicators`` starts with the indicator of [0, 1]^n. ``mixed`` starts
    with an odd and an even symmetrized bump about the box midpoint and then
    cycles through the other kinds.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if kind not in KINDS:
        raise ValueError(f"unknown corpus kind {kind!r}")
    g = GridFunction.zeros(lo, hi, h)
    rng = np.random.default_rng(seed)
    out = []
    if kind == "indicators":
        out.append(indicator(g, (0.0,) * g.dim, (1.0,) * g.dim))
        while len(out) < count:
            out.append(_realize(g, _draw("indicators", rng, g.lo, g.hi)))
    elif kind == "mixed":
        cycle = ("bumps", "indicators", "bandlimited")
        i = 0
        while len(out) < count:
            if len(out) < 2:
                base = _realize(g, _draw("bumps", rng, g.lo, g.hi))
                out.append(symmetrize(base, -1.0 if not out else 1.0))
            else:
                out.append(_realize(g, _draw(cycle[i % 3], rng, g.lo, g.hi)))
                i += 1
    else:
        while len(out) < count:
            out.append(_realize(g, _draw(kind, rng, g.lo, g.hi)))
    return out[:count]


def write_corpus(funcs, outdir, prefix="f"):
    """Write each function as ``prefix_XXX.csv`` (GridFunction CSV); returns the paths."""
    import os

    from .io import atomic_write

    os.makedirs(outdir, exist_ok=True)
    paths = []
    for i, f in enumerate(funcs):
        p = os.path.join(outdir, f"{prefix}_{i:03d}.csv")
        atomic_write(p, f.to_csv())
        paths.append(p)
    return paths
