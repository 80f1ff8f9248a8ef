"""Experiment configuration: one JSON document with ``grid``, ``weights`` and ``experiments``.

Example::

    {
      "seed": 17,
      "grid": {"box_lo": [0.0], "box_hi": [1.0], "h": 0.015625,
               "policy": {"stride": 1, "K": null, "max_radius_factor": 1.0,
                          "per_octave": 1}},
      "weights": {"one": {"kind": "constant", "c": 1.0}},
      "experiments": [{"id": "ap1", "type": "ap_constant", "weight": "one", "q": 2}]
    }

Every experiment has an ``id`` (unique) and a ``type``; the other keys
depend on the type (see ``EXPERIMENT_KEYS``). ``validate`` checks everything
up front and raises ConfigInvalid naming the offending key. The
off-diagonal exponent relation of the fractional integral is enforced here;
other hypotheses (reverse Hoelder, bump conditions) are checked when the
experiment runs and flag its report instead.
"""
from __future__ import annotations

import json
import math

from .errors import ConfigInvalid, IOFailure
from .grid import BallPolicy
from .weights import weight_from_json
from .young import young_from_json

OPERATOR_KINDS = ("cz", "lp_g", "lp_area", "fractional", "maximal")
SPACES = ("lebesgue", "lorentz", "lorentz_morrey", "morrey", "variable")
CORPUS_KINDS = ("bumps", "indicators", "bandlimited", "mixed")

# required and optional keys per experiment type
EXPERIMENT_KEYS = {
    "ap_constant": ({"weight", "q"}, {"expect"}),
    "rh_constant": ({"weight", "s"}, {"expect"}),
    "two_weight_ap": ({"w", "v", "p"}, {"expect"}),
    "sawyer": ({"w", "v", "p"}, {"expect"}),
    "bump_constant": ({"w", "v", "phi", "p"}, {"expect"}),
    "power_membership": ({"gamma", "s"}, {"center", "expect", "tol"}),
    "norm_transfer": ({"kind", "space", "q", "corpus"},
                      {"p", "t", "theta", "alpha", "w", "v", "levels", "phi", "expect",
                       "kernel", "aperture"}),
    "good_lambda": ({"kind", "weight", "corpus"},
                    {"betas", "kappas", "p1", "a", "s", "alpha", "n_lams", "kernel"}),
    "local_estimates": ({"kind", "corpus", "center", "radius"}, {"p1", "alpha", "kernel"}),
    "kolmogorov": ({"kind", "corpus", "nu", "E"}, {"alpha", "kernel"}),
    "weak_type": ({"kind", "corpus"}, {"levels", "kernel", "expect"}),
    "whitney": ({"omega"}, {"max_overlap"}),
    "rh_ratio": ({"weight", "s"}, {"trials"}),
}


def load(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise IOFailure(f"cannot read {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigInvalid("<document>", f"invalid JSON: {e}") from e


def _num(d, key, where, positive=False, allow_inf=False):
    if key not in d:
        raise ConfigInvalid(f"{where}.{key}", "missing")
    v = d[key]
    if isinstance(v, str) and allow_inf and v.lower() in ("inf", "infinity"):
        return math.inf
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigInvalid(f"{where}.{key}", "must be a number")
    if positive and not v > 0:
        raise ConfigInvalid(f"{where}.{key}", "must be positive")
    return float(v)


def _grid(cfg):
    g = cfg.get("grid")
    if not isinstance(g, dict):
        raise ConfigInvalid("grid", "missing or not an object")
    lo, hi = g.get("box_lo"), g.get("box_hi")
    if not (isinstance(lo, list) and isinstance(hi, list) and len(lo) == len(hi)
            and len(lo) in (1, 2)):
        raise ConfigInvalid("grid.box_lo", "box_lo and box_hi must be lists of length 1 or 2")
    if not all(b > a for a, b in zip(lo, hi)):
        raise ConfigInvalid("grid.box_hi", "must exceed box_lo")
    h = _num(g, "h", "grid", positive=True)
    for a, b in zip(lo, hi):
        n = (b - a) / h
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ConfigInvalid("grid.h", "box sides must be multiples of h")
    pol = g.get("policy", {})
    try:
        policy = BallPolicy(int(pol.get("stride", 1)), pol.get("K"),
                            float(pol.get("max_radius_factor", 1.0)), int(pol.get("per_octave", 1)))
    except (TypeError, ValueError) as e:
        raise ConfigInvalid("grid.policy", str(e)) from e
    return tuple(map(float, lo)), tuple(map(float, hi)), h, policy


def _weights(cfg):
    out = {}
    ws = cfg.get("weights", {})
    if not isinstance(ws, dict):
        raise ConfigInvalid("weights", "must be an object")
    for name, spec in ws.items():
        try:
            out[name] = weight_from_json(spec)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigInvalid(f"weights.{name}", str(e)) from e
    return out


def _check_corpus(c, where):
    if not isinstance(c, dict):
        raise ConfigInvalid(where, "must be an object")
    if c.get("kind") not in CORPUS_KINDS:
        raise ConfigInvalid(f"{where}.kind", f"unknown corpus kind {c.get('kind')!r}")
    cnt = c.get("count", 1)
    if not isinstance(cnt, int) or cnt < 1:
        raise ConfigInvalid(f"{where}.count", "must be an integer >= 1")


def validate(cfg):
    """Validate a config dict; returns a normalized copy with parsed objects.

    Raises
    ------
    ConfigInvalid
    """
    if not isinstance(cfg, dict):
        raise ConfigInvalid("<document>", "top level must be an object")
    lo, hi, h, policy = _grid(cfg)
    n = len(lo)
    weights = _weights(cfg)
    exps = cfg.get("experiments")
    if not isinstance(exps, list) or not exps:
        raise ConfigInvalid("experiments", "must be a non-empty list")
    seen = set()
    for i, e in enumerate(exps):
        where = f"experiments[{i}]"
        if not isinstance(e, dict):
            raise ConfigInvalid(where, "must be an object")
        eid = e.get("id", f"exp{i:03d}")
        if not isinstance(eid, str) or not eid or "/" in eid:
            raise ConfigInvalid(f"{where}.id", "must be a non-empty name without '/'")
        if eid in seen:
            raise ConfigInvalid(f"{where}.id", f"duplicate id {eid!r}")
        seen.add(eid)
        typ = e.get("type")
        if typ not in EXPERIMENT_KEYS:
            raise ConfigInvalid(f"{where}.type", f"unknown experiment type {typ!r}")
        req, opt = EXPERIMENT_KEYS[typ]
        for k in sorted(req):
            if k not in e:
                raise ConfigInvalid(f"{where}.{k}", "missing")
        for k in e:
            if k not in req | opt | {"id", "type"}:
                raise ConfigInvalid(f"{where}.{k}", "unknown key")
        for k in ("weight", "w", "v"):
            if k in e and e[k] not in weights:
                raise ConfigInvalid(f"{where}.{k}", f"unknown weight {e[k]!r}")
        if "kind" in e and e["kind"] not in OPERATOR_KINDS:
            raise ConfigInvalid(f"{where}.kind", f"unknown operator kind {e['kind']!r}")
        if "space" in e and e["space"] not in SPACES:
            raise ConfigInvalid(f"{where}.space", f"unknown space {e['space']!r}")
        if "corpus" in e:
            _check_corpus(e["corpus"], f"{where}.corpus")
        if "phi" in e:
            try:
                young_from_json(e["phi"])
            except (KeyError, TypeError, ValueError) as err:
                raise ConfigInvalid(f"{where}.phi", str(err)) from err
        for k in ("q", "p"):
            if k in e:
                _num(e, k, where, positive=True)
        if "s" in e:
            s = _num(e, "s", where, allow_inf=True)
            if not s > 1:
                raise ConfigInvalid(f"{where}.s", "must exceed 1")
        if typ == "ap_constant" and not e["q"] >= 1:
            raise ConfigInvalid(f"{where}.q", "must be >= 1")
        if typ in ("two_weight_ap", "sawyer", "bump_constant") and not e["p"] > 1:
            raise ConfigInvalid(f"{where}.p", "must exceed 1")
        if e.get("kind") == "fractional":
            alpha = _num(e, "alpha", where, positive=True)
            if not alpha < n:
                raise ConfigInvalid(f"{where}.alpha", "must lie in (0, n)")
            if typ == "norm_transfer":
                q = e["q"]
                p = e.get("p", q)
                if abs(1 / q - (1 / p - alpha / n)) > 1e-12:
                    raise ConfigInvalid(f"{where}.q", "exponents violate 1/q = 1/p - alpha/n")
        if typ == "norm_transfer" and e["space"] in ("morrey", "lorentz_morrey"):
            th = _num(e, "theta", where, positive=True)
            if th > n:
                raise ConfigInvalid(f"{where}.theta", "must lie in (0, n]")
        if typ == "norm_transfer" and e["space"] == "lorentz_morrey" and "t" not in e:
            raise ConfigInvalid(f"{where}.t", "missing")
        if typ == "kolmogorov":
            nu = _num(e, "nu", where)
            if not 0 < nu < 1:
                raise ConfigInvalid(f"{where}.nu", "must lie in (0, 1)")
            if not (isinstance(e["E"], list) and e["E"]):
                raise ConfigInvalid(f"{where}.E", "must be a non-empty list of [lo, hi] boxes")
        if typ == "whitney":
            om = e["omega"]
            if not isinstance(om, dict) or om.get("shape") not in ("interval", "ball"):
                raise ConfigInvalid(f"{where}.omega", "shape must be 'interval' or 'ball'")
        if typ == "power_membership" and not e["gamma"] > -n:
            raise ConfigInvalid(f"{where}.gamma", "must exceed -n")
    return {"seed": int(cfg.get("seed", 0)), "lo": lo, "hi": hi, "h": h, "policy": policy,
            "weights": weights, "weight_specs": cfg.get("weights", {}), "experiments": exps}
