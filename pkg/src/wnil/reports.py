"""Report records shared by the operators, verify and cli modules."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

VERIFY_COLUMNS = ["experiment", "kind", "space", "q", "t", "theta", "p", "alpha",
                  "gamma", "h", "family_size", "lhs", "rhs", "ratio", "flags"]


def _num(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class InequalityReport:
    """Left side, right side and their ratio, with the parameters used.

    ``series`` holds one dict per refinement level (keys include ``h``,
    ``family_size`` and ``ratio``); ``checks`` holds hypothesis sub-reports.
    """

    lhs: float
    rhs: float
    ratio: float = field(init=False)
    params: dict = field(default_factory=dict)
    series: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    experiment: str = ""
    kind: str = ""
    space: str = ""

    def __post_init__(self):
        if self.rhs > 0:
            self.ratio = self.lhs / self.rhs
        elif self.lhs == 0:
            self.ratio = 0.0
        else:
            self.ratio = math.inf

    def row(self):
        p = self.params
        vals = {"experiment": self.experiment, "kind": self.kind, "space": self.space,
                "q": p.get("q"), "t": p.get("t"), "theta": p.get("theta"), "p": p.get("p"),
                "alpha": p.get("alpha"), "gamma": p.get("gamma"), "h": p.get("h"),
                "family_size": p.get("family_size"), "lhs": self.lhs, "rhs": self.rhs,
                "ratio": self.ratio, "flags": ";".join(self.flags)}
        return [_num(vals[c]) for c in VERIFY_COLUMNS]

    def to_dict(self):
        d = asdict(self)
        return json.loads(json.dumps(d, default=str))


def verify_csv(reports):
    lines = [",".join(VERIFY_COLUMNS)]
    for r in reports:
        lines.append(",".join(r.row()))
    return "\n".join(lines) + "\n"
