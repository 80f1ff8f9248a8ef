"""Small shared constructors for the test modules."""
import numpy as np

from wnil.grid import GridFunction, cells_in_ball


def grid1(lo=0.0, hi=1.0, h=1 / 64, fn=None):
    g = GridFunction.zeros((lo,), (hi,), h)
    return g if fn is None else GridFunction.from_function(fn, (lo,), (hi,), h)


def grid2(lo=(0.0, 0.0), hi=(1.0, 1.0), h=1 / 16, fn=None):
    g = GridFunction.zeros(lo, hi, h)
    return g if fn is None else GridFunction.from_function(fn, lo, hi, h)


def indicator1(lo, hi, h, a=0.0, b=1.0):
    return grid1(lo, hi, h, lambda x: ((x >= a) & (x <= b)).astype(float))


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def brute_maximal_1d(f, radii_cells):
    """Uncentred-over-the-family maximal function by explicit loops (zero outside the box)."""
    v = f.values
    n = len(v)
    out = np.zeros(n)
    for c in range(n):
        for R in radii_cells:
            m = int(np.ceil(R))
            offs = [o for o in range(-m, m + 1) if abs(o) < R]
            avg = sum(abs(v[c + o]) if 0 <= c + o < n else 0.0 for o in offs) / len(offs)
            for o in offs:
                if 0 <= c + o < n:
                    out[c + o] = max(out[c + o], avg)
    return out


def ball_values(f, B):
    """Values of f on the lattice cells of B, zero outside the box."""
    idx = cells_in_ball(f.lo, f.h, B)
    out = np.zeros(len(idx))
    ok = np.all((idx >= 0) & (idx < np.asarray(f.shape)), axis=1)
    out[ok] = f.values[tuple(idx[ok].T)]
    return out
