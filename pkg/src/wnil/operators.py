"""Truncated singular integrals, the fractional integral and Littlewood-Paley functions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .reports import InequalityReport

__all__ = [
    "CZKernelSpec", "cz_stencil", "cz_apply", "fractional_integral", "LPProfile",
    "lp_profile", "mexican_hat", "mexican_hat_hat", "calderon_constant", "lp_layers",
    "lp_convolve", "lp_g", "lusin_area", "s_tilde", "area_sandwich", "g_star_lambda",
    "gstar_domination", "smooth_bump", "kolmogorov_check",
]


def _as2d(v):
    v = np.asarray(v, float)
    return v[None, :] if v.ndim == 1 else v


# Calderon-Zygmund kernels ---------------------------------------------------

@dataclass(frozen=True)
class CZKernelSpec:
    """A built-in singular kernel.

    ``kind`` is "hilbert" (1-D, 1/(x - y)) or "riesz" (2-D,
    (x_j - y_j)/|x - y|^3 with ``j`` in {1, 2}). ``eps`` is the truncation
    radius (None means h/2) and ``c`` a normalization constant.
    """

    kind: str = "hilbert"
    j: int = 1
    eps: float | None = None
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("hilbert", "riesz"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "riesz" and self.j not in (1, 2):
            raise ValueError("riesz kernel needs j in {1, 2}")

    @property
    def dim(self):
        return 1 if self.kind == "hilbert" else 2

    def truncation(self, h):
        eps = h / 2 if self.eps is None else self.eps
        if eps < h / 2:
            raise ValueError("truncation radius must be at least h/2")
        return eps

    def __call__(self, d):
        """K(x, y) as a function of d = x - y, shape (..., dim)."""
        d = np.asarray(d, float)
        if self.kind == "hilbert":
            return self.c / d[..., 0]
        r = np.sqrt(np.sum(d * d, axis=-1))
        return self.c * d[..., self.j - 1] / r ** 3

    def to_dict(self):
        return {"kind": self.kind, "j": self.j, "eps": self.eps, "c": self.c}


def _offset_grid(shape):
    axes = [np.arange(-(n - 1), n) for n in shape]
    return np.meshgrid(*axes, indexing="ij")


def cz_stencil(kernel, shape, h):
    """Kernel values K(m h) h^n on all offsets m, zero where |m h| < eps."""
    eps = kernel.truncation(h)
    mm = _offset_grid(shape)
    d = np.stack([m * h for m in mm], axis=-1)
    r = np.sqrt(np.sum(d * d, axis=-1))
    keep = r >= eps
    st = np.zeros(r.shape)
    st[keep] = kernel(d[keep]) * h ** len(shape)
    return _as2d(st)


def cz_apply(kernel, f, at=None, impl=None):
    """Truncated singular integral of ``f``.

    With ``at=None`` the result is a GridFunction on the grid of ``f``: the
    evaluation and source lattices coincide, so the truncation at h/2 removes
    exactly the diagonal and the odd kernel gives an antisymmetric matrix.
    Otherwise ``at`` is an (m, dim) array of evaluation points and an array is
    returned.
    """
    if f.dim != kernel.dim:
        raise ValueError("kernel and function dimensions differ")
    if at is None:
        st = cz_stencil(kernel, f.shape, f.h)
        out = kernels.toeplitz(_as2d(f.values), st, impl=impl)
        return f.with_values(out.reshape(f.shape))
    eps = kernel.truncation(f.h)
    pts = f.points()
    vals = f.values.ravel()
    nz = vals != 0
    pts, vals = pts[nz], vals[nz]
    at = np.atleast_2d(np.asarray(at, float))
    out = np.empty(len(at))
    for i, x in enumerate(at):
        d = x[None, :] - pts
        keep = np.sqrt(np.sum(d * d, axis=1)) >= eps
        out[i] = np.sum(kernel(d[keep]) * vals[keep]) * f.cell_volume
    return out


def _diag_cell_integral(alpha, n, h):
    """Integral of |y|^(alpha - n) over the cell centred at the origin."""
    if n == 1:
        return 2 * (h / 2) ** alpha / alpha
    from .weights import Power, cell_means
    return float(cell_means(Power(alpha - n, (0.0, 0.0)), [np.array(0.0), np.array(0.0)], h)) * h * h


def fractional_integral(f, alpha, c=1.0, impl=None):
    """c * sum_y f(y) |x - y|^(alpha - n) h^n, the diagonal cell integrated exactly."""
    n = f.dim
    if not 0 < alpha < n:
        raise ValueError("alpha must lie in (0, n)")
    mm = _offset_grid(f.shape)
    r = np.sqrt(sum((m * f.h) ** 2 for m in mm))
    st = np.zeros(r.shape)
    nz = r > 0
    st[nz] = r[nz] ** (alpha - n) * f.cell_volume
    st[~nz] = _diag_cell_integral(alpha, n, f.h)
    out = kernels.toeplitz(_as2d(f.values), _as2d(c * st), impl=impl)
    return f.with_values(out.reshape(f.shape))


# Littlewood-Paley family ----------------------------------------------------

def _hat_norm(n):
    # L^2 normalization of (n - |x|^2) exp(-|x|^2 / 2)
    return math.sqrt(4 / (3 * math.sqrt(math.pi))) if n == 1 else 1 / math.sqrt(2 * math.pi)


def mexican_hat(x, n):
    """phi(x) = c (n - |x|^2) exp(-|x|^2/2), unit L^2 norm; x has shape (..., n)."""
    r2 = np.sum(np.asarray(x, float) ** 2, axis=-1)
    return _hat_norm(n) * (n - r2) * np.exp(-r2 / 2)


def mexican_hat_hat(xi_norm, n):
    """Fourier transform of ``mexican_hat`` (angular frequency) as a function of |xi|."""
    k2 = np.asarray(xi_norm, float) ** 2
    return _hat_norm(n) * (2 * math.pi) ** (n / 2) * k2 * np.exp(-k2 / 2)


def calderon_constant(n):
    """Integral of |phi_hat(t xi)|^2 dt/t over (0, inf); independent of xi != 0."""
    return _hat_norm(n) ** 2 * (2 * math.pi) ** n / 2


@dataclass(frozen=True, eq=False)
class LPProfile:
    """Mexican-hat profile with a log-uniform t-grid and trapezoid dt/t weights."""

    dim: int
    t: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    alpha: float = 1.0
    lam: float = 3.0

    def to_dict(self):
        return {"dim": self.dim, "t_min": float(self.t[0]), "t_max": float(self.t[-1]),
                "n_t": len(self.t), "alpha": self.alpha, "lam": self.lam}


def lp_profile(f, n_t=48, t_min=None, t_max=None, alpha=1.0, lam=3.0):
    """Default profile for the grid of ``f``: t in [h/4, 4 diam(box)]."""
    if alpha < 1 or lam <= 2:
        raise ValueError("need alpha >= 1 and lambda > 2")
    t_min = f.h / 4 if t_min is None else t_min
    t_max = 4 * f.diameter if t_max is None else t_max
    s = np.linspace(math.log(t_min), math.log(t_max), n_t)
    ds = s[1] - s[0]
    w = np.full(n_t, ds)
    w[0] = w[-1] = ds / 2
    return LPProfile(f.dim, np.exp(s), w, float(alpha), float(lam))


def _pad3(f):
    """Zero-pad to three times the box width; returns (array, offset per axis)."""
    v = _as2d(f.values)
    if f.dim == 1:
        n = v.shape[1]
        out = np.zeros((1, 3 * n))
        out[0, n:2 * n] = v[0]
        return out, (0, n)
    n0, n1 = v.shape
    out = np.zeros((3 * n0, 3 * n1))
    out[n0:2 * n0, n1:2 * n1] = v
    return out, (n0, n1)


def _crop3(f, arr):
    if f.dim == 1:
        n = f.shape[0]
        return arr[0, n:2 * n]
    n0, n1 = f.shape
    return arr[n0:2 * n0, n1:2 * n1]


def _freq_norm(shape2d, h, dim):
    if dim == 1:
        return np.abs(2 * np.pi * np.fft.fftfreq(shape2d[1], d=h))[None, :]
    k0 = 2 * np.pi * np.fft.fftfreq(shape2d[0], d=h)
    k1 = 2 * np.pi * np.fft.fftfreq(shape2d[1], d=h)
    return np.sqrt(k0[:, None] ** 2 + k1[None, :] ** 2)


def lp_layers(f, prof):
    """phi_t * f on the padded (3x) periodic lattice for every t in the profile.

    Returns an array of shape (n_t, *padded_shape) in the 2-D layout.
    """
    P, _ = _pad3(f)
    F = np.fft.fft2(P)
    xi = _freq_norm(P.shape, f.h, f.dim)
    out = np.empty((len(prof.t),) + P.shape)
    for m, t in enumerate(prof.t):
        out[m] = np.real(np.fft.ifft2(mexican_hat_hat(t * xi, f.dim) * F))
    return out


def lp_convolve(f, t, method="fft"):
    """phi_t * f on the padded lattice, by FFT or by the equivalent direct circular sum."""
    P, _ = _pad3(f)
    xi = _freq_norm(P.shape, f.h, f.dim)
    mult = mexican_hat_hat(t * xi, f.dim)
    if method == "fft":
        return np.real(np.fft.ifft2(mult * np.fft.fft2(P)))
    if method != "direct":
        raise ValueError("method must be 'fft' or 'direct'")
    kappa = np.real(np.fft.ifft2(mult))
    ny, nx = P.shape
    out = np.zeros(P.shape)
    for a, b in zip(*np.nonzero(P)):
        out += P[a, b] * np.roll(np.roll(kappa, a, axis=0), b, axis=1)
    return out


def lp_g(f, prof):
    """Littlewood-Paley g-function."""
    U = lp_layers(f, prof)
    G = np.sqrt(np.einsum("m,m...->...", prof.w, U * U))
    return f.with_values(_crop3(f, G).reshape(f.shape))


def smooth_bump(rho):
    """Radial bump equal to 1 for rho <= 1 and 0 for rho >= 2, smooth in between."""
    rho = np.asarray(rho, float)
    out = np.where(rho < 1, 1.0, 0.0)
    mid = (rho >= 1) & (rho < 2)
    a = 2 - rho[mid]
    b = rho[mid] - 1
    ea = np.exp(-1 / a)
    eb = np.where(b > 0, np.exp(-1 / np.where(b > 0, b, 1)), 0.0)
    out[mid] = ea / (ea + eb)
    return out


def _offsets_within(rmax_cells, shape2d, dim):
    """Lexicographic integer offsets with |o| < rmax_cells, clipped to the lattice."""
    if dim == 1:
        m = min(int(math.ceil(rmax_cells)), shape2d[1] - 1)
        ox = np.arange(-m, m + 1)
        d = np.abs(ox).astype(float)
        keep = d < rmax_cells
        return np.zeros(keep.sum(), dtype=np.intp), ox[keep], d[keep]
    m0 = min(int(math.ceil(rmax_cells)), shape2d[0] - 1)
    m1 = min(int(math.ceil(rmax_cells)), shape2d[1] - 1)
    a, b = np.meshgrid(np.arange(-m0, m0 + 1), np.arange(-m1, m1 + 1), indexing="ij")
    d = np.sqrt(a * a + b * b)
    keep = d < rmax_cells
    return a[keep], b[keep], d[keep]


def _cone_sums(f, prof, U2, weight_sets, reach, impl=None):
    """Sum over t of (w_t h^n / t^n) * sum_o W(o, t) |u_t(x + o)|^2, for several W.

    ``weight_sets`` is a list of functions rho -> weights where rho is the
    offset length divided by t; ``reach(t)`` bounds the offset length (in
    cells, exclusive) so all weight sets share one ordered offset list.
    """
    n = f.dim
    acc = [np.zeros(U2.shape[1:]) for _ in weight_sets]
    for m, t in enumerate(prof.t):
        oy, ox, d = _offsets_within(reach(t) / f.h, U2.shape[1:], n)
        rho = d * f.h / t
        coef = prof.w[m] * f.cell_volume / t ** n
        for j, W in enumerate(weight_sets):
            wk = W(rho)
            acc[j] += coef * kernels.offset_sum(U2[m], oy, ox, wk, impl=impl)
    return [f.with_values(_crop3(f, np.sqrt(a)).reshape(f.shape)) for a in acc]


def _layers_sq(f, prof):
    U = lp_layers(f, prof)
    return U * U


def lusin_area(f, alpha, prof, impl=None):
    """Lusin area function over the cone of aperture ``alpha``."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    return _cone_sums(f, prof, _layers_sq(f, prof), [lambda r: (r < alpha).astype(float)],
                      lambda t: alpha * t, impl)[0]


def s_tilde(f, alpha, prof, impl=None):
    """Area function with the sharp cone replaced by ``smooth_bump(|y|/(alpha t))``."""
    return area_sandwich(f, alpha, prof, impl)[1]


def area_sandwich(f, alpha, prof, impl=None):
    """(S_alpha, smoothed S_alpha, S_2alpha) computed over one shared offset order.

    The three weight sets are ordered termwise, and every sum runs over the
    same offsets in the same order, so the floating-point results are ordered
    at every cell.
    """
    U2 = _layers_sq(f, prof)
    sets = [lambda r: (r < alpha).astype(float),
            lambda r: smooth_bump(r / alpha),
            lambda r: (r < 2 * alpha).astype(float)]
    return tuple(_cone_sums(f, prof, U2, sets, lambda t: 2 * alpha * t, impl))


def _padded_span(f):
    """Length of the diagonal of the padded lattice."""
    return math.sqrt(sum((3 * s) ** 2 for s in f.shape)) * f.h


def _gstar_weight(lam, n):
    return lambda r: (1.0 / (1.0 + r)) ** (lam * n)


def g_star_lambda(f, lam, prof, impl=None):
    """g*_lambda with y over the padded lattice."""
    if not lam > 2:
        raise ValueError("lambda must exceed 2")
    span = _padded_span(f)
    return _cone_sums(f, prof, _layers_sq(f, prof), [_gstar_weight(lam, f.dim)],
                      lambda t: 2 * span, impl)[0]


def gstar_domination(f, lam, prof, tol=1e-6, impl=None):
    """Both sides of g*_lam <= S_1 + sum_{k<=K} 2^(-k lam n/2) S_{2^(k+1)}.

    K is the smallest index with tail bound 2^(-K lam n/2) max S_{2^(K+1)} f
    below ``tol`` and with the aperture 2^(K+1) cone at the smallest t
    already spanning the padded lattice (so the omitted terms vanish).

    Returns
    -------
    gstar, rhs : GridFunction
    K : int
    tail : float
    """
    if not lam > 2:
        raise ValueError("lambda must exceed 2")
    n = f.dim
    span = _padded_span(f)
    k_cover = max(0, int(math.ceil(math.log2(span / prof.t[0]))) - 1)
    U2 = _layers_sq(f, prof)
    gs = _cone_sums(f, prof, U2, [_gstar_weight(lam, n)], lambda t: 2 * span, impl)[0]
    rhs = lusin_cone(f, prof, U2, 1.0, impl)
    k = 0
    while True:
        Sk = lusin_cone(f, prof, U2, 2.0 ** (k + 1), impl)
        rhs = rhs + 2.0 ** (-k * lam * n / 2) * Sk
        tail = 2.0 ** (-k * lam * n / 2) * float(np.max(Sk))
        if k >= k_cover and tail < tol:
            break
        k += 1
    return gs, f.with_values(rhs), k, tail


def lusin_cone(f, prof, U2, alpha, impl=None):
    """Area-function values (array) from precomputed squared layers."""
    return _cone_sums(f, prof, U2, [lambda r: (r < alpha).astype(float)],
                      lambda t: alpha * t, impl)[0].values


def kolmogorov_check(Sf, f, E, nu, kind="weak11", alpha=None):
    """Both sides of the Kolmogorov inequality on the cell set ``E`` (boolean mask).

    lhs = sum_E |Sf|^nu h^n and rhs = |E|^e ||f||_1^nu with e = 1 - nu
    (weak11) or 1 - nu (n - alpha)/n (fractional).
    """
    if not 0 < nu < 1:
        raise ValueError("nu must lie in (0, 1)")
    E = np.asarray(E, bool).reshape(f.shape)
    hv = f.cell_volume
    mE = float(E.sum()) * hv
    l1 = float(np.sum(np.abs(f.values))) * hv
    if mE <= 0 or l1 <= 0:
        raise ValueError("need |E| > 0 and ||f||_1 > 0")
    n = f.dim
    if kind == "weak11":
        e = 1 - nu
    elif kind == "fractional":
        e = 1 - nu * (n - alpha) / n
    else:
        raise ValueError(f"unknown Kolmogorov kind {kind!r}")
    lhs = float(np.sum(np.abs(Sf.values[E]) ** nu)) * hv
    rhs = mE ** e * l1 ** nu
    return InequalityReport(lhs, rhs, params={"nu": nu, "kind": kind, "alpha": alpha,
                                              "exponent": e, "E_measure": mE, "h": f.h},
                            kind=kind, space="kolmogorov")
