"""Command-line experiment runner.

Subcommands: ``run``, ``corpus``, ``report`` and the single-experiment
shortcuts ``norm``, ``ap`` and ``goodlambda``. ``run`` exits with 0 when
every hard assertion passes, 2 when some hypothesis check is flagged and 1
on any error or failed assertion.
"""
from __future__ import annotations

import argparse
import glob
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import jsonschema
import numpy as np

from . import config as cfgmod
from . import operators as ops
from .corpus import make_corpus, write_corpus
from .errors import ConfigInvalid, IOFailure, WnilError
from .grid import Ball, ball_family
from .io import atomic_write
from .maximal import weak_type_ratio
from .norms import SpaceParams
from .reports import VERIFY_COLUMNS, InequalityReport, verify_csv
from .verify import (OperatorSpec, check_local_estimates, fit_exponent, good_lambda_trace,
                     norm_transfer_experiment, rh_measure_ratio_check)
from .weights import (Power, ap_constant, bump_constant, growth_factors,
                      power_weight_membership, rh_constant, sawyer_sp, two_weight_ap)
from .whitney import omega_mask, verify_cover, whitney_decompose
from .young import young_from_json

EXIT_OK, EXIT_ERROR, EXIT_FLAGGED = 0, 1, 2

SUMMARY_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["experiment", "type", "status", "value", "flags", "slope"],
        "properties": {
            "experiment": {"type": "string"},
            "type": {"type": "string"},
            "status": {"enum": ["ok", "flagged", "failed"]},
            "value": {"type": ["number", "string", "boolean", "null"]},
            "flags": {"type": "array", "items": {"type": "string"}},
            "slope": {"type": ["number", "null"]},
        },
    },
}


def _jsonable(x):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n"


# job context ---------------------------------------------------------------

class _Ctx:
    def __init__(self, norm):
        self.n = norm
        self.lo, self.hi, self.h = norm["lo"], norm["hi"], norm["h"]
        self.policy = norm["policy"]
        self.weights = norm["weights"]
        self.seed = norm["seed"]
        self._balls = None

    @property
    def dim(self):
        return len(self.lo)

    @property
    def balls(self):
        if self._balls is None:
            self._balls = ball_family((self.lo, self.hi), self.h, self.policy)
        return self._balls

    def corpus_factory(self, spec):
        seed = int(spec.get("seed", self.seed))
        kind, count = spec["kind"], int(spec.get("count", 1))
        return lambda h: make_corpus(kind, seed, count, self.lo, self.hi, h)

    def operator(self, e):
        kern = e.get("kernel")
        kernel = ops.CZKernelSpec(**kern) if kern else (
            ops.CZKernelSpec() if self.dim == 1 else ops.CZKernelSpec("riesz", 1))
        return OperatorSpec(e["kind"], kernel, float(e.get("alpha", 0.5)),
                            aperture=float(e.get("aperture", 1.0)))


def _s(v):
    return math.inf if isinstance(v, str) else float(v)


def _expect(e, value, key="constant"):
    """Optional user assertion from the ``expect`` block."""
    ex = e.get("expect")
    if not ex:
        return []
    out = []
    if key in ex:
        tgt = ex[key]
        if isinstance(tgt, bool):
            ok = value == tgt
        else:
            tgt = _s(tgt)
            rtol = float(ex.get("rtol", 1e-9))
            ok = (value == tgt) or (math.isfinite(tgt) and abs(value - tgt) <= rtol * max(1.0, abs(tgt)))
        out.append({"name": f"expect_{key}", "ok": bool(ok), "value": value, "target": tgt})
    if "max_ratio" in ex:
        out.append({"name": "expect_max_ratio", "ok": bool(value <= float(ex["max_ratio"])),
                    "value": value, "target": ex["max_ratio"]})
    return out


def _weight_job(ctx, e):
    typ = e["type"]
    W = ctx.weights
    if typ == "ap_constant":
        rep = ap_constant(W[e["weight"]], float(e["q"]), ctx.balls)
    elif typ == "rh_constant":
        rep = rh_constant(W[e["weight"]], _s(e["s"]), ctx.balls)
    elif typ == "two_weight_ap":
        rep = two_weight_ap(W[e["w"]], W[e["v"]], float(e["p"]), ctx.balls)
    elif typ == "sawyer":
        rep = sawyer_sp(W[e["w"]], W[e["v"]], float(e["p"]), ctx.balls)
    else:
        p = float(e["p"])
        rep = bump_constant(W[e["w"]], W[e["v"]], young_from_json(e["phi"]), (p, 1 / p), ctx.balls)
    asserts = _expect(e, rep.constant)
    if typ in ("ap_constant", "rh_constant"):
        # Hoelder/Jensen: these constants are at least 1
        asserts.append({"name": "at_least_one", "ok": bool(rep.constant >= 1 - 1e-9),
                        "value": rep.constant})
    return rep.to_csv(), {"report": rep.to_dict()}, asserts, []


def _membership_job(ctx, e):
    gamma, s = float(e["gamma"]), _s(e["s"])
    center = tuple(e.get("center", [0.0] * ctx.dim))
    analytic = power_weight_membership(gamma, s, ctx.dim)
    rep = ap_constant(Power(gamma, center), s, ctx.balls)
    g = growth_factors(rep)
    tol = float(e.get("tol", 0.05))
    last = g[-1] if g else 1.0
    numeric = bool(math.isfinite(rep.constant) and last <= 1 + tol)
    asserts = [{"name": "numeric_matches_analytic", "ok": numeric == analytic,
                "numeric": numeric, "analytic": analytic, "last_growth": last}]
    asserts += _expect(e, analytic, "membership")
    js = {"report": rep.to_dict(), "membership": analytic, "numeric_membership": numeric,
          "growth": g}
    return rep.to_csv(), js, asserts, []


def _params(e, n):
    return SpaceParams(q=float(e["q"]) if "q" in e else None,
                       t=_s(e["t"]) if "t" in e else None,
                       theta=float(e["theta"]) if "theta" in e else None,
                       p=float(e["p"]) if "p" in e else None,
                       alpha=float(e["alpha"]) if "alpha" in e else None, n=n,
                       gamma=float(e["alpha"]) / n if e.get("kind") == "fractional" else 0.0)


def _norm_job(ctx, e):
    W = ctx.weights
    spec = ctx.operator(e)
    params = _params(e, ctx.dim)
    phi = young_from_json(e["phi"]) if "phi" in e else None
    levels = int(e.get("levels", 1))
    rep = norm_transfer_experiment(spec, e["space"], ctx.corpus_factory(e["corpus"]),
                                   W.get(e.get("w")), W.get(e.get("v")), params,
                                   levels=levels, h=ctx.h, policy=ctx.policy, phi=phi,
                                   experiment=e["id"])
    asserts = [{"name": "series_finite",
                "ok": all(math.isfinite(r["ratio"]) for r in rep.series)}]
    asserts += _expect(e, rep.ratio, "ratio")
    return _series_csv(rep), {"report": rep.to_dict()}, asserts, list(rep.flags)


def _series_csv(rep):
    """One verify-CSV row per refinement level."""
    rows = []
    for s in rep.series:
        r = InequalityReport(s["lhs"], s["rhs"], params=dict(rep.params, h=s["h"],
                                                             family_size=s["family_size"]),
                             flags=rep.flags, experiment=rep.experiment, kind=rep.kind,
                             space=rep.space)
        rows.append(r)
    return verify_csv(rows)


def _good_lambda_job(ctx, e):
    spec = ctx.operator(e)
    f = ctx.corpus_factory(e["corpus"])(ctx.h)[0]
    F = spec(f, None, ctx.balls)
    params = SpaceParams(p1=float(e.get("p1", 0.5)), p2=1.0, p3=math.inf,
                         a=float(e.get("a", 2.0)), s=_s(e["s"]) if "s" in e else None,
                         gamma=spec.gamma(ctx.dim))
    sweep = None
    if "betas" in e or "kappas" in e:
        sweep = (np.asarray(e.get("betas", 2.0 ** np.arange(1, 11)), float),
                 np.asarray(e.get("kappas", 2.0 ** -np.arange(0, 13)), float))
    tr = good_lambda_trace(F, f, ctx.weights[e["weight"]], params, sweep, ctx.balls,
                           n_lams=int(e.get("n_lams", 64)))
    lines = ["beta,kappa,admissible,first_fail_lambda"]
    for i, b in enumerate(tr.betas):
        for j, k in enumerate(tr.kappas):
            ff = tr.first_fail[i, j]
            lines.append(f"{b!r},{k!r},{int(tr.admissible[i, j])},"
                         f"{'' if ff < 0 else repr(float(tr.lams[ff]))}")
    closed = tr.upward_closed()
    asserts = [{"name": "upward_closed", "ok": all(closed), "per_kappa": closed}]
    flags = [] if tr.min_beta is not None else ["no_admissible_beta"]
    return "\n".join(lines) + "\n", {"trace": tr.to_dict()}, asserts, flags


def _local_job(ctx, e):
    spec = ctx.operator(e)
    B = Ball(tuple(e["center"]), float(e["radius"]))
    params = SpaceParams(p1=float(e.get("p1", 0.5)))
    lines = ["function,C1,C2,eps_alone,domination_gap"]
    out, asserts = [], []
    for i, f in enumerate(ctx.corpus_factory(e["corpus"])(ctx.h)):
        le = check_local_estimates(spec, f, B, params, ctx.balls)
        scale = max(1.0, float(np.max(np.abs(spec(f, None, ctx.balls).values))))
        lines.append(f"{i},{le.C1!r},{le.C2!r},{le.eps_alone!r},{le.domination_gap!r}")
        out.append(vars(le))
        asserts.append({"name": f"domination_{i}", "ok": le.domination_gap <= 1e-12 * scale,
                        "gap": le.domination_gap})
    return "\n".join(lines) + "\n", {"estimates": out}, asserts, []


def _box_mask(g, box):
    lo, hi = np.atleast_1d(box[0]), np.atleast_1d(box[1])
    m = np.ones(g.shape, dtype=bool)
    for x, a, b in zip(g.centers(), lo, hi):
        m &= (x >= a) & (x <= b)
    return m


def _kolmogorov_job(ctx, e):
    spec = ctx.operator(e)
    nu = float(e["nu"])
    frac = spec.kind == "fractional"
    reps = []
    for i, f in enumerate(ctx.corpus_factory(e["corpus"])(ctx.h)):
        Sf = spec(f, None, ctx.balls)
        for box in e["E"]:
            r = ops.kolmogorov_check(Sf, f, _box_mask(f, box), nu,
                                     "fractional" if frac else "weak11",
                                     spec.alpha if frac else None)
            r.experiment = f"{e['id']}:{i}"
            reps.append(r)
    ms = [r.params["E_measure"] for r in reps]
    slope = fit_exponent(ms, [r.lhs for r in reps]) if len(set(ms)) > 1 else None
    asserts = [{"name": "ratios_finite", "ok": all(math.isfinite(r.ratio) for r in reps)}]
    return verify_csv(reps), {"reports": [r.to_dict() for r in reps], "fitted_exponent": slope,
                              "exponent": reps[0].params["exponent"]}, asserts, []


def _weak_job(ctx, e):
    spec = ctx.operator(e)
    fac = ctx.corpus_factory(e["corpus"])
    series = []
    for lev in range(int(e.get("levels", 1))):
        h = ctx.h / 2 ** lev
        fam = ball_family((ctx.lo, ctx.hi), h, ctx.policy)
        best = 0.0
        for f in fac(h):
            best = max(best, weak_type_ratio(spec(f, None, fam), f))
        series.append({"h": h, "family_size": fam.size, "ratio": best})
    lines = [",".join(VERIFY_COLUMNS)]
    for s in series:
        r = InequalityReport(s["ratio"], 1.0, params={"h": s["h"], "family_size": s["family_size"],
                                                      "q": 1.0, "t": math.inf},
                             experiment=e["id"], kind=spec.kind, space="weak_l1")
        lines.append(",".join(r.row()))
    asserts = [{"name": "finite", "ok": all(math.isfinite(s["ratio"]) for s in series)}]
    asserts += _expect(e, series[-1]["ratio"], "ratio")
    return "\n".join(lines) + "\n", {"series": series}, asserts, []


def _whitney_job(ctx, e):
    om = e["omega"]
    if om["shape"] == "interval":
        a, b = float(om["lo"]), float(om["hi"])
        mask = omega_mask(lambda x: (x > a) & (x < b), ctx.lo, ctx.hi, ctx.h)
    else:
        c, r = om["center"], float(om["radius"])
        mask = omega_mask(lambda *X: sum((x - ci) ** 2 for x, ci in zip(X, c)) < r * r,
                          ctx.lo, ctx.hi, ctx.h)
    cover = whitney_decompose(mask, (ctx.lo, ctx.hi), ctx.h)
    rep = verify_cover(cover, e.get("max_overlap"))
    js = {"balls": len(cover.balls), "overlap": rep.overlap, "covers": rep.covers,
          "disjoint": rep.disjoint, "separated": rep.separated, "overlap_ok": rep.overlap_ok}
    return cover.to_csv(), js, [{"name": "cover_properties", "ok": rep.passed}], []


def _rh_ratio_job(ctx, e):
    rep = rh_measure_ratio_check(ctx.weights[e["weight"]], _s(e["s"]), ctx.balls,
                                 int(e.get("trials", 200)), seed=ctx.seed)
    lines = ["ball,E_cells,lhs,rhs"] + [f"{r['ball']},{r['E_cells']},{r['lhs']!r},{r['rhs']!r}"
                                        for r in rep.rows]
    js = {"R": rep.R, "s": rep.s, "violations": rep.violations, "max_slack": rep.max_slack}
    return "\n".join(lines) + "\n", js, [{"name": "no_violations", "ok": rep.violations == 0}], []


JOBS = {
    "ap_constant": _weight_job, "rh_constant": _weight_job, "two_weight_ap": _weight_job,
    "sawyer": _weight_job, "bump_constant": _weight_job, "power_membership": _membership_job,
    "norm_transfer": _norm_job, "good_lambda": _good_lambda_job,
    "local_estimates": _local_job, "kolmogorov": _kolmogorov_job, "weak_type": _weak_job,
    "whitney": _whitney_job, "rh_ratio": _rh_ratio_job,
}


def run_job(raw_cfg, index):
    """Run experiment ``index`` of a config; returns (id, csv, json dict, status)."""
    norm = cfgmod.validate(raw_cfg)
    ctx = _Ctx(norm)
    e = dict(norm["experiments"][index])
    e.setdefault("id", f"exp{index:03d}")
    try:
        csv, js, asserts, flags = JOBS[e["type"]](ctx, e)
    except (WnilError, ValueError) as err:
        return e["id"], None, {"experiment": e, "error": f"{type(err).__name__}: {err}",
                               "status": "failed"}, "failed"
    failed = [a for a in asserts if not a["ok"]]
    status = "failed" if failed else ("flagged" if flags else "ok")
    js = dict(js, experiment=e, grid={"box_lo": ctx.lo, "box_hi": ctx.hi, "h": ctx.h},
              seed=ctx.seed, assertions=asserts, flags=flags, status=status)
    return e["id"], csv, js, status


def run(config_path, out=None, seed=None, jobs=1):
    """Execute a config file; returns the exit code."""
    raw = cfgmod.load(config_path)
    if seed is not None:
        raw = dict(raw, seed=int(seed))
    norm = cfgmod.validate(raw)
    out = os.environ.get("WNIL_OUT") or out or "wnil_out"
    n = len(norm["experiments"])
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(run_job, [raw] * n, range(n)))
    else:
        results = [run_job(raw, i) for i in range(n)]
    code = EXIT_OK
    for eid, csv, js, status in results:
        if csv is not None:
            atomic_write(os.path.join(out, f"{eid}.csv"), csv)
        atomic_write(os.path.join(out, f"{eid}.json"), _dumps(js))
        if status == "failed":
            code = EXIT_ERROR
        elif status == "flagged" and code == EXIT_OK:
            code = EXIT_FLAGGED
    return code


# report --------------------------------------------------------------------

def _key(v):
    return math.inf if isinstance(v, str) else v


def _summary_row(path):
    with open(path) as fh:
        js = json.load(fh)
    e = js.get("experiment", {})
    value, slope = None, None
    if "membership" in js:
        value = js["membership"]
    elif "estimates" in js:
        value = max((r["C1"] for r in js["estimates"]), default=None, key=_key)
    elif "report" in js:
        r = js["report"]
        value = r.get("constant", r.get("ratio"))
        series = r.get("series") or []
        pts = [(s.get("h"), s.get("ratio")) for s in series
               if isinstance(s.get("h"), (int, float)) and isinstance(s.get("ratio"), (int, float))]
        if len(pts) > 1 and pts[-1][1] > 0 and pts[-2][1] > 0:
            slope = math.log(pts[-1][1] / pts[-2][1]) / math.log(pts[-1][0] / pts[-2][0])
    elif "series" in js:
        value = js["series"][-1]["ratio"]
    elif "trace" in js:
        value = js["trace"]["min_beta"]
    elif "fitted_exponent" in js:
        value = js["fitted_exponent"]
    elif "overlap" in js:
        value = js["overlap"]
    elif "max_slack" in js:
        value = js["max_slack"]
    return {"experiment": e.get("id", os.path.splitext(os.path.basename(path))[0]),
            "type": e.get("type", ""), "status": js.get("status", "failed"),
            "value": value, "flags": list(js.get("flags", [])), "slope": slope}


def summarize(directory):
    if not os.path.isdir(directory):
        raise IOFailure(f"{directory} is not a directory")
    # names starting with "_" are inputs (single-shot configs), not reports
    paths = sorted(glob.glob(os.path.join(directory, "[!_]*.json")))
    return [_summary_row(p) for p in paths]


def _print_table(rows, stream):
    head = ["experiment", "type", "status", "value", "flags", "slope"]
    stream.write("\t".join(head) + "\n")
    for r in rows:
        mark = "*" if r["status"] != "ok" else ""
        stream.write("\t".join([r["experiment"] + mark, r["type"], r["status"], str(r["value"]),
                                ";".join(r["flags"]),
                                "" if r["slope"] is None else f"{r['slope']:.4g}"]) + "\n")


# single-shot wrappers ----------------------------------------------------------

def _grid_block(args):
    return {"box_lo": list(args.box_lo), "box_hi": list(args.box_hi), "h": args.h}


def _single(args, exp, weights=None):
    cfg = {"seed": args.seed if args.seed is not None else 0, "grid": _grid_block(args),
           "weights": weights or {}, "experiments": [exp]}
    path = os.path.join(os.environ.get("WNIL_OUT") or args.out or "wnil_out", "_config.json")
    atomic_write(path, _dumps(cfg))
    return run(path, args.out, None, 1)


def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory (WNIL_OUT overrides)")
    p.add_argument("--seed", type=int, help="seed overriding the config")
    p.add_argument("--jobs", type=int, default=1, help="parallel jobs")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _add_grid(p):
    p.add_argument("--box-lo", type=float, nargs="+", default=[0.0])
    p.add_argument("--box-hi", type=float, nargs="+", default=[1.0])
    p.add_argument("--h", type=float, default=1 / 64)


def build_parser():
    ap = argparse.ArgumentParser(prog="wnil", description="Weighted norm inequality experiments")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run", help="run every experiment of a config")
    _add_common(p)
    p.add_argument("config_path", nargs="?", help="config file (or use --config)")
    p = sub.add_parser("corpus", help="write a seeded corpus as GridFunction CSV files")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--kind", choices=cfgmod.CORPUS_KINDS, default="bumps")
    p.add_argument("--count", type=int, default=1)
    p = sub.add_parser("report", help="summarize a run directory")
    _add_common(p)
    p.add_argument("directory", nargs="?")
    p = sub.add_parser("ap", help="A_q constant of one weight")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--weight", default='{"kind": "constant", "c": 1.0}', help="weight JSON")
    p.add_argument("--q", type=float, default=2.0)
    p = sub.add_parser("norm", help="one norm-transfer experiment")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--kind", default="cz")
    p.add_argument("--space", default="lebesgue")
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--p", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--corpus", default="bumps")
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--levels", type=int, default=1)
    p = sub.add_parser("goodlambda", help="one good-lambda sweep")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--kind", default="cz")
    p.add_argument("--weight", default='{"kind": "power", "gamma": 0.5, "center": [0.0]}')
    p.add_argument("--corpus", default="bumps")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            path = args.config or args.config_path
            if not path:
                raise ConfigInvalid("--config", "a config file is required")
            return run(path, args.out, args.seed, max(1, args.jobs))
        if args.cmd == "corpus":
            if args.count < 1:
                raise ConfigInvalid("--count", "must be >= 1")
            funcs = make_corpus(args.kind, args.seed or 0, args.count, args.box_lo,
                                args.box_hi, args.h)
            out = os.environ.get("WNIL_OUT") or args.out or "wnil_corpus"
            paths = write_corpus(funcs, out, args.kind)
            if args.json:
                print(json.dumps(paths))
            else:
                print("\n".join(paths))
            return EXIT_OK
        if args.cmd == "report":
            d = args.directory or os.environ.get("WNIL_OUT") or args.out or "wnil_out"
            rows = summarize(d)
            if args.json:
                rows = _jsonable(rows)
                jsonschema.validate(rows, SUMMARY_SCHEMA)
                print(json.dumps(rows, sort_keys=True))
            else:
                _print_table(rows, sys.stdout)
            return EXIT_OK
        if args.config:
            return run(args.config, args.out, args.seed, max(1, args.jobs))
        if args.cmd == "ap":
            return _single(args, {"id": "ap", "type": "ap_constant", "weight": "w", "q": args.q},
                           {"w": json.loads(args.weight)})
        if args.cmd == "norm":
            e = {"id": "norm", "type": "norm_transfer", "kind": args.kind, "space": args.space,
                 "q": args.q, "corpus": {"kind": args.corpus, "count": args.count},
                 "levels": args.levels}
            for k in ("p", "t", "theta", "alpha"):
                if getattr(args, k) is not None:
                    e[k] = getattr(args, k)
            return _single(args, e)
        if args.cmd == "goodlambda":
            e = {"id": "goodlambda", "type": "good_lambda", "kind": args.kind, "weight": "w",
                 "corpus": {"kind": args.corpus, "count": 1}}
            return _single(args, e, {"w": json.loads(args.weight)})
    except ConfigInvalid as err:
        print(f"ConfigInvalid: {err}", file=sys.stderr)
        return EXIT_ERROR
    except (IOFailure, WnilError, ValueError, OSError) as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
