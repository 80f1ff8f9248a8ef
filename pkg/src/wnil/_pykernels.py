"""Pure numpy versions of the compiled kernels in ``_core``.

Loops run over stencil offsets and vectorize over centers (or cells), in the
same order as the compiled loops, so the stencil routines agree bit for bit.
``toeplitz`` uses an FFT instead of the direct double sum.
"""
import numpy as np
from scipy.signal import fftconvolve


def stencil_sum(src, cy, cx, oy, ox):
    acc = np.zeros(len(cy))
    for dy, dx in zip(oy, ox):
        acc += src[cy + dy, cx + dx]
    return acc


def stencil_max(src, cy, cx, oy, ox):
    out = np.full(len(cy), -np.inf)
    for dy, dx in zip(oy, ox):
        v = src[cy + dy, cx + dx]
        np.copyto(out, v, where=v > out)
    return out


def scatter_max(dst, arg, cy, cx, oy, ox, vals, ids):
    nx = dst.shape[1]
    flat = cy * nx + cx
    if np.unique(flat).size < flat.size:
        # repeated centres: within one offset pass the sequential loop keeps
        # the largest value, the earliest centre on ties
        order = np.lexsort((np.arange(flat.size), -vals, flat))
        first = np.ones(flat.size, dtype=bool)
        first[1:] = flat[order][1:] != flat[order][:-1]
        keep = order[first]
        cy, cx, vals, ids = cy[keep], cx[keep], vals[keep], ids[keep]
    for dy, dx in zip(oy, ox):
        y = cy + dy
        x = cx + dx
        cur = dst[y, x]
        better = vals > cur
        if better.any():
            dst[y[better], x[better]] = vals[better]
            arg[y[better], x[better]] = ids[better]


def offset_sum(src, oy, ox, w):
    ny, nx = src.shape
    out = np.zeros_like(src)
    for dy, dx, wk in zip(oy, ox, w):
        y0, y1 = (0, ny - dy) if dy >= 0 else (-dy, ny)
        x0, x1 = (0, nx - dx) if dx >= 0 else (-dx, nx)
        if y1 <= y0 or x1 <= x0:
            continue
        out[y0:y1, x0:x1] += wk * src[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
    return out


def toeplitz(f, st):
    ny, nx = f.shape
    full = fftconvolve(f, st, mode="full")
    return np.ascontiguousarray(full[ny - 1:2 * ny - 1, nx - 1:2 * nx - 1])
