"""Empirical checkers for local estimates, the good-lambda inequality and norm transfer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .errors import EmptySweep, HypothesisViolated
from .grid import Ball, BallPolicy, ball_family, cells_in_ball
from .maximal import fractional_maximal, hl_maximal
from .norms import (ExponentField, lebesgue_norm, lorentz_morrey_norm, lorentz_norm,
                    variable_norm)
from .reports import InequalityReport
from .weights import TruncatedPower, cell_means, rh_constant

__all__ = [
    "KINDS", "SPACES", "OperatorSpec", "Decomposition", "make_decomposition",
    "LocalEstimates", "check_local_estimates", "GoodLambdaTrace", "good_lambda_trace",
    "choose_rh_exponent", "norm_transfer_experiment", "RHRatioReport",
    "rh_measure_ratio_check", "fit_exponent",
]

KINDS = ("cz", "lp_g", "lp_area", "fractional", "maximal")
SPACES = ("lebesgue", "lorentz", "lorentz_morrey", "morrey", "variable")
RH_SWEEP = (1.1, 1.5, 2.0, 4.0, math.inf)


@dataclass(frozen=True)
class OperatorSpec:
    """One operator of a given kind with its parameters.

    ``alpha`` is the order of the fractional integral, ``aperture`` the cone
    aperture of the area function and ``n_t`` the size of the t-grid. The
    Littlewood-Paley profile is built from the grid of the input.
    """

    kind: str = "cz"
    kernel: ops.CZKernelSpec = ops.CZKernelSpec()
    alpha: float = 0.5
    c: float = 1.0
    aperture: float = 1.0
    n_t: int = 48

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")

    def profile(self, f):
        return ops.lp_profile(f, n_t=self.n_t, alpha=self.aperture)

    def __call__(self, f, prof=None, balls=None):
        k = self.kind
        if k == "cz":
            return ops.cz_apply(self.kernel, f)
        if k == "fractional":
            return ops.fractional_integral(f, self.alpha, self.c)
        if k == "maximal":
            if balls is None:
                balls = ball_family((f.lo, f.hi), f.h)
            return hl_maximal(f, balls)
        prof = self.profile(f) if prof is None else prof
        if k == "lp_g":
            return ops.lp_g(f, prof)
        return ops.s_tilde(f, self.aperture, prof)

    def gamma(self, n):
        """The fractional-maximal order paired with this operator."""
        return self.alpha / n if self.kind == "fractional" else 0.0

    def to_dict(self):
        return {"kind": self.kind, "kernel": self.kernel.to_dict(), "alpha": self.alpha,
                "c": self.c, "aperture": self.aperture, "n_t": self.n_t}


def _as_spec(kind):
    return kind if isinstance(kind, OperatorSpec) else OperatorSpec(str(kind))


def _ball_mask(g, B):
    idx = cells_in_ball(g.lo, g.h, B)
    ok = np.ones(len(idx), dtype=bool)
    for a, n in enumerate(g.shape):
        ok &= (idx[:, a] >= 0) & (idx[:, a] < n)
    m = np.zeros(g.shape, dtype=bool)
    m[tuple(idx[ok].T)] = True
    return m, len(idx)


# decompositions ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Decomposition:
    """F = Op f, F_B = Op(f 1_8B) and R_B = Op(f - f 1_8B) on the whole grid;
    ``mask`` marks the cells of B inside the box and ``count`` all cells of B."""

    F: object
    FB: object
    RB: object
    mask: np.ndarray
    count: int

    def on_ball(self):
        """(F, F_B, R_B) values at the cells of B."""
        return self.F.values[self.mask], self.FB.values[self.mask], self.RB.values[self.mask]

    def domination_gap(self):
        """max over B of |F| - |F_B| - |R_B| (non-positive when the split dominates)."""
        F, FB, RB = self.on_ball()
        if F.size == 0:
            return -math.inf
        return float(np.max(np.abs(F) - np.abs(FB) - np.abs(RB)))


def make_decomposition(kind, f, B, balls=None):
    """Split the operator of ``kind`` at ball ``B`` into near (8B) and far parts."""
    spec = _as_spec(kind)
    m8, _ = _ball_mask(f, B.scaled(8))
    if not m8.any():
        raise ValueError("8B does not meet the grid")
    near = f.with_values(np.where(m8, f.values, 0.0))
    far = f - near
    prof = spec.profile(f) if spec.kind in ("lp_g", "lp_area") else None
    mask, count = _ball_mask(f, B)
    return Decomposition(spec(f, prof, balls), spec(near, prof, balls), spec(far, prof, balls),
                         mask, count)


# local estimates -----------------------------------------------------------

@dataclass
class LocalEstimates:
    """Smallest constants in the two local estimates on one ball.

    ``C1``: sup_B |R_B| over min_B [M(|F|^p1)]^(1/p1) + min_B [M_gamma f].
    ``C2``: (mean_B |F_B|^p1)^(1/p1) over min_B [M_gamma f], with eps = 0.
    ``eps_alone``: the eps that would be needed with C2 = 0.
    """

    C1: float
    C2: float
    eps: float
    eps_alone: float
    lhs1: float
    lhs2: float
    min_MF: float
    min_Mf: float
    domination_gap: float
    params: dict = field(default_factory=dict)


def _ratio(a, b):
    if b > 0:
        return a / b
    return 0.0 if a == 0 else math.inf


def check_local_estimates(kind, f, B, params, balls):
    """Empirical constants of the local estimates for the decomposition at ``B``.

    ``params`` carries p1 (defaults to 1/2); the operators use p2 = 1,
    p3 = inf, and gamma = alpha/n for the fractional kind.
    """
    spec = _as_spec(kind)
    nu = params.p1 if params.p1 is not None else 0.5
    gamma = spec.gamma(f.dim)
    dec = make_decomposition(spec, f, B, balls)
    F, FB, RB = dec.on_ball()
    MF = hl_maximal(dec.F.with_values(np.abs(dec.F.values) ** nu), balls).values[dec.mask]
    Mf = fractional_maximal(f, gamma, balls).values[dec.mask]
    min_MF = float(np.min(MF)) ** (1 / nu)
    min_Mf = float(np.min(Mf))
    lhs1 = float(np.max(np.abs(RB)))
    # cells of B outside the box carry F_B = 0
    lhs2 = (float(np.sum(np.abs(FB) ** nu)) / dec.count) ** (1 / nu)
    return LocalEstimates(_ratio(lhs1, min_MF + min_Mf), _ratio(lhs2, min_Mf), 0.0,
                          _ratio(lhs2, min_MF), lhs1, lhs2, min_MF, min_Mf,
                          dec.domination_gap(),
                          {"kind": spec.kind, "p1": nu, "p2": 1.0, "p3": math.inf,
                           "gamma": gamma, "center": B.center, "radius": B.radius, "h": f.h})


# good-lambda ---------------------------------------------------------------

@dataclass
class GoodLambdaTrace:
    """Both sides of the good-lambda inequality over a (beta, kappa, lambda) sweep.

    ``admissible[i, j]`` says whether (betas[i], kappas[j]) satisfies the
    inequality at every lambda; ``first_fail[i, j]`` is the index of the first
    failing lambda (-1 if none).
    """

    lams: np.ndarray
    betas: np.ndarray
    kappas: np.ndarray
    E: np.ndarray
    E_beta: np.ndarray
    max_term: np.ndarray
    admissible: np.ndarray
    first_fail: np.ndarray
    min_beta: float | None
    min_beta_kappa: float | None
    params: dict = field(default_factory=dict)

    def upward_closed(self):
        """For each kappa: once a beta is admissible, every larger beta is too."""
        out = []
        for j in range(len(self.kappas)):
            col = self.admissible[:, j]
            hit = np.flatnonzero(col)
            out.append(bool(hit.size == 0 or col[hit[0]:].all()))
        return out

    def to_dict(self):
        return {"lams": self.lams.tolist(), "betas": self.betas.tolist(),
                "kappas": self.kappas.tolist(), "admissible": self.admissible.tolist(),
                "first_fail": self.first_fail.tolist(), "min_beta": self.min_beta,
                "min_beta_kappa": self.min_beta_kappa, "params": self.params,
                "upward_closed": self.upward_closed()}


def _level_measure(vals, wts, thresholds):
    """sum of wts over {vals > t} for every threshold t (vectorized)."""
    order = np.argsort(vals, kind="stable")
    v = vals[order]
    tail = np.concatenate([np.cumsum(wts[order][::-1])[::-1], [0.0]])
    pos = np.searchsorted(v, thresholds, side="right")
    return tail[pos]


def _cell_weights(w, g):
    axes = [g.axis_centers(a) for a in range(g.dim)]
    if g.dim == 2:
        axes = np.meshgrid(*axes, indexing="ij")
    return np.asarray(cell_means(w, axes, g.h, 1.0), float).reshape(g.shape) * g.cell_volume


def choose_rh_exponent(w, balls, sweep=RH_SWEEP):
    """Largest s in ``sweep`` with a finite reverse Hoelder constant, and that constant."""
    best = None
    for s in sweep:
        c = rh_constant(w, s, balls).constant
        if math.isfinite(c):
            best = (s, c)
    return best


def good_lambda_trace(F, f, w, params, sweep=None, balls=None, lams=None, n_lams=64):
    """Evaluate both sides of the good-lambda inequality on a sweep.

    Parameters
    ----------
    F, f : GridFunction
    w : weight
    params : SpaceParams
        Uses p1, p2 (defaults 1/2 and 1), gamma, s (None: chosen from the
        RH sweep) and a (default 2).
    sweep : (betas, kappas)
        Defaults to {2, ..., 2^10} and {2^-k : k = 0..12}.
    """
    if sweep is None:
        sweep = (2.0 ** np.arange(1, 11), 2.0 ** -np.arange(0, 13))
    betas = np.asarray(sweep[0], float)
    kappas = np.asarray(sweep[1], float)
    if betas.size == 0 or kappas.size == 0:
        raise EmptySweep("beta and kappa sweeps must be non-empty")
    betas = np.sort(betas)
    if balls is None:
        balls = ball_family((F.lo, F.hi), F.h)
    p1 = params.p1 if params.p1 is not None else 0.5
    p2 = params.p2 if params.p2 is not None else 1.0
    a = params.a if params.a is not None else 2.0
    s = params.s
    if s is None:
        got = choose_rh_exponent(w, balls)
        if got is None:
            raise HypothesisViolated("weight has no finite reverse Hoelder constant in the sweep")
        s = got[0]
    expo = a if math.isinf(s) else (s - 1) * a / s

    MF = hl_maximal(F.with_values(np.abs(F.values) ** p1), balls).values.ravel()
    Mf = fractional_maximal(f.with_values(np.abs(f.values) ** p2), params.gamma, balls).values.ravel()
    wts = _cell_weights(w, F).ravel()
    if lams is None:
        pos = MF[MF > 0]
        lo, hi = (float(pos.min()), float(pos.max())) if pos.size else (1e-3, 1e3)
        lams = np.geomspace(lo / 4, hi * 2, n_lams)
    lams = np.asarray(lams, float)

    E = _level_measure(MF, wts, lams)
    E_beta = np.stack([_level_measure(MF, wts, b * lams) for b in betas])
    max_term = np.stack([_level_measure(Mf, wts, (k * lams) ** (p2 / p1)) for k in kappas])
    rhs = betas[:, None, None] ** -expo * E[None, None, :] + max_term[None, :, :]
    ok = E_beta[:, None, :] <= rhs * (1 + 1e-12)
    admissible = ok.all(axis=2)
    first_fail = np.where(admissible, -1, np.argmin(ok, axis=2))
    min_beta = min_kappa = None
    for i, b in enumerate(betas):
        js = np.flatnonzero(admissible[i])
        if js.size:
            min_beta = float(b)
            # the largest admissible kappa is the most informative
            min_kappa = float(kappas[js].max())
            break
    return GoodLambdaTrace(lams, betas, kappas, E, E_beta, max_term, admissible, first_fail,
                           min_beta, min_kappa,
                           {"p1": p1, "p2": p2, "p3": params.p3, "a": a, "s": s,
                            "gamma": params.gamma, "exponent": expo})


# norm transfer -------------------------------------------------------------

def _space_norm(space, g, expo, params, w, balls, pfield):
    if space == "lebesgue":
        return lebesgue_norm(g, expo, w)
    if space == "lorentz":
        return lorentz_norm(g, expo, params.t if params.t is not None else expo, w)
    if space == "morrey":
        return lorentz_morrey_norm(g, expo, expo, params.theta, balls)
    if space == "lorentz_morrey":
        return lorentz_morrey_norm(g, expo, params.t, params.theta, balls)
    if space == "variable":
        return variable_norm(g, pfield(g))
    raise ValueError(f"unknown space {space!r}")


def _truncated_weight_check(F, params, balls):
    """Compare r^((theta-n)/q) ||F 1_B||_{q,t} with the same quantity computed
    through the truncated weight min(|x - y|^a, r^a), a = theta - rho0 - n,
    on the largest family ball about the box centre."""
    n = F.dim
    q, t, theta = params.q, params.t, params.theta
    rho0 = theta / 2
    ex = -n + theta - rho0
    mid = tuple((a + b) / 2 for a, b in zip(F.lo, F.hi))
    c = tuple(F.lo[a] + (F.index_of(mid)[a] + 0.5) * F.h for a in range(n))
    r = balls.max_radius
    mask, _ = _ball_mask(F, Ball(c, r))
    G = F.with_values(np.where(mask, F.values, 0.0))
    direct = r ** ((theta - n) / q) * lorentz_norm(G, q, t)
    wx = TruncatedPower(ex, c, r)
    via = r ** ((theta - n) / q) * r ** ((n - theta + rho0) / q) * lorentz_norm(G, q, t, wx)
    return {"direct": direct, "via_truncated_weight": via,
            "rel_diff": abs(direct - via) / direct if direct > 0 else 0.0}


def _hypotheses(spec, space, params, w, v, balls, phi):
    checks, flags = {}, []
    if space in ("lebesgue", "lorentz") and w is not None:
        got = choose_rh_exponent(w, balls)
        checks["rh"] = {"s": None if got is None else got[0],
                        "constant": None if got is None else got[1]}
        if got is None:
            flags.append("hypothesis:rh")
    if spec.kind == "fractional":
        try:
            params.validate(off_diagonal=True)
            checks["exponent_relation"] = True
        except ValueError as e:
            checks["exponent_relation"] = str(e)
            flags.append("hypothesis:exponents")
    if phi is not None and params.p is not None:
        from .young import bump_integral
        bi = bump_integral(phi, params.p)
        checks["bump_integral"] = {"value": bi.value, "diverges": bi.diverges}
        if bi.diverges:
            flags.append("hypothesis:bump_integral")
        if w is not None and v is not None:
            from .weights import bump_constant
            bc = bump_constant(w, v, phi, (params.p, 1.0 / params.p), balls).constant
            checks["bump_constant"] = bc
            if not math.isfinite(bc):
                flags.append("hypothesis:bump_constant")
    return checks, flags


def norm_transfer_experiment(kind, space, corpus, w=None, v=None, params=None, balls=None,
                             levels=1, h=None, policy=BallPolicy(), phi=None, pfield=None,
                             experiment=""):
    """sup over the corpus of ||Op f||_target / ||f||_source.

    Parameters
    ----------
    kind : str or OperatorSpec
    space : one of SPACES
    corpus : list of GridFunction, or callable h -> list of GridFunction
        A callable is called with ``h`` and, for ``levels`` > 1, with h
        halved at each further level (the ball family is rebuilt each time); the report's
        ``series`` has one entry per level and its ratio is the finest.
    w, v : weights for target and source (None: Lebesgue measure)
    params : SpaceParams
        q is the target exponent, p the source exponent (default q), t and
        theta as the space needs.
    pfield : callable GridFunction -> ExponentField, for the variable space
        (default: constant q).

    Hypothesis failures do not stop the experiment; they are recorded in
    ``checks`` and ``flags``. Functions with zero source norm are skipped
    and counted.
    """
    spec = _as_spec(kind)
    if space not in SPACES:
        raise ValueError(f"unknown space {space!r}")
    if params is None:
        raise ValueError("params are required")
    q = params.q
    p = params.p if params.p is not None else q
    if pfield is None:
        def pfield(g):
            return ExponentField.constant(g, q)
    series = []
    checks, flags = {}, []
    best = (0.0, 0.0, 0.0)
    if callable(corpus) and h is None:
        raise ValueError("a corpus factory needs the coarsest h")
    if not callable(corpus) and levels > 1:
        raise ValueError("refinement needs a corpus factory")
    for lev in range(levels):
        funcs = corpus(h / 2 ** lev) if callable(corpus) else list(corpus)
        if not funcs:
            raise ValueError("corpus is empty")
        g0 = funcs[0]
        fam = balls if (balls is not None and lev == 0) else ball_family((g0.lo, g0.hi), g0.h, policy)
        if lev == 0:
            checks, flags = _hypotheses(spec, space, params, w, v, fam, phi)
        top = (0.0, 0.0, 0.0)
        skipped = 0
        for f in funcs:
            src = _space_norm(space, f, p, params, v, fam, pfield)
            if src == 0:
                skipped += 1
                continue
            F = spec(f, None, fam)
            tgt = _space_norm(space, F, q, params, w, fam, pfield)
            if tgt / src > top[0]:
                top = (tgt / src, tgt, src)
        if space == "lorentz_morrey" and lev == 0:
            checks["truncated_weight"] = _truncated_weight_check(spec(funcs[0], None, fam),
                                                                 params, fam)
        series.append({"h": g0.h, "family_size": fam.size, "ratio": top[0], "lhs": top[1],
                       "rhs": top[2], "skipped": skipped})
        best = top
    rep = InequalityReport(best[1], best[2], experiment=experiment, kind=spec.kind, space=space)
    rep.series = series
    rep.checks = checks
    rep.flags = flags
    rep.params = {"q": q, "p": p, "t": params.t, "theta": params.theta,
                  "alpha": spec.alpha if spec.kind == "fractional" else None,
                  "gamma": params.gamma, "h": series[-1]["h"],
                  "family_size": series[-1]["family_size"], "operator": spec.to_dict(),
                  "w": None if w is None else w.to_dict(), "v": None if v is None else v.to_dict()}
    return rep


def growth(report):
    """Ratio between the last two refinement levels of a report's series."""
    r = [s["ratio"] for s in report.series]
    return r[-1] / r[-2] if len(r) > 1 and r[-2] > 0 else math.nan


# reverse Hoelder measure ratio ----------------------------------------------

@dataclass
class RHRatioReport:
    """w(E)/w(B) against R (|E|/|B|)^((s-1)/s) on random (B, E) pairs."""

    R: float
    s: float
    trials: int
    violations: int
    max_slack: float
    rows: list = field(default_factory=list)


def rh_measure_ratio_check(w, s, balls, trials=200, seed=0, E_fraction=None):
    """Test w(E)/w(B) <= [w]_RH_s (|E|/|B|)^((s-1)/s) on random E within family balls.

    ``max_slack`` is the largest lhs/rhs (at most 1 when no violation).
    ``E_fraction`` fixes |E|/|B| (rounded to whole cells); otherwise it is
    drawn uniformly per trial.
    """
    R = rh_constant(w, s, balls).constant
    if not math.isfinite(R):
        raise HypothesisViolated("reverse Hoelder constant is infinite on the family")
    rng = np.random.default_rng(seed)
    pts = balls.padded_points()
    wbar = np.asarray(cell_means(w, pts, balls.h, 1.0), float)
    cy, cx = balls.padded_centers()
    ex = 1.0 if math.isinf(s) else (s - 1) / s
    rows, viol, slack = [], 0, 0.0
    for _ in range(trials):
        k = int(rng.integers(len(balls.radii)))
        i = int(rng.integers(balls.n_centers))
        off = balls.offsets(k)
        m = len(off)
        frac = rng.uniform(0, 1) if E_fraction is None else E_fraction
        size = min(m, max(1, int(round(frac * m))))
        pick = rng.choice(m, size=size, replace=False)
        vals = wbar[cy[i] + off[:, 0], cx[i] + off[:, 1]]
        lhs = float(np.sum(vals[pick]) / np.sum(vals))
        rhs = R * (size / m) ** ex
        slack = max(slack, lhs / rhs)
        if lhs > rhs * (1 + 1e-12):
            viol += 1
        rows.append({"ball": balls.ball_id(i, k), "E_cells": size, "lhs": lhs, "rhs": rhs})
    return RHRatioReport(R, s, trials, viol, slack, rows)


def fit_exponent(x, y):
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])
