"""Pass/fail records for checked inequalities, plus their JSON/CSV forms."""

from dataclasses import dataclass, field
import csv
import io
import json
import math

REPORT_FIELDS = ("name", "eq", "lhs", "rhs", "margin", "holds", "tol", "inputs")


@dataclass
class BoundReport:
    """One checked inequality ``lhs <= rhs`` (margin = rhs - lhs).

    ``inputs`` echoes every number needed to recompute both sides, so a
    report can be audited without the code path that produced it.
    """

    name: str
    eq: str
    lhs: float
    rhs: float
    tol: float
    inputs: dict = field(default_factory=dict)
    margin: float = field(init=False)
    holds: bool = field(init=False)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.tol = float(self.tol)
        self.margin = self.rhs - self.lhs
        self.holds = bool(self.margin >= -self.tol)
        for key, value in self.inputs.items():
            if not _finite(value):
                raise ValueError(f"report {self.name!r}: input {key!r} is not finite")

    def to_dict(self):
        return {
            "name": self.name,
            "eq": self.eq,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "holds": self.holds,
            "tol": self.tol,
            "inputs": _plain(self.inputs),
        }

    @classmethod
    def from_dict(cls, data):
        rep = cls(data["name"], data["eq"], data["lhs"], data["rhs"], data["tol"], dict(data["inputs"]))
        return rep


def _finite(value):
    if isinstance(value, (list, tuple)):
        return all(_finite(v) for v in value)
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return True
    return math.isfinite(float(value))


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, str)) or value is None:
        return value
    if hasattr(value, "tolist"):
        return _plain(value.tolist())
    if isinstance(value, int):
        return value
    return float(value)


def fmt(x):
    """17 significant digits, '.' decimal separator."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=False) + "\n"


def reports_to_csv(reports, scenario=None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = (["scenario"] if scenario is not None else []) + list(REPORT_FIELDS)
    writer.writerow(header)
    for r in reports:
        d = r.to_dict()
        row = [scenario] if scenario is not None else []
        row += [d["name"], d["eq"], fmt(d["lhs"]), fmt(d["rhs"]), fmt(d["margin"]), fmt(d["holds"]), fmt(d["tol"])]
        row.append(json.dumps(d["inputs"], sort_keys=True))
        writer.writerow(row)
    return buf.getvalue()
