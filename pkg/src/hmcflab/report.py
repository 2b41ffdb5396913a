"""Structured inequality reports and their JSON/CSV serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np


def decide(slack, tolerance, expected_to_fail=False):
    """Pass flag as a pure function of the serialized fields."""
    if expected_to_fail:
        return bool(slack < -tolerance)
    return bool(slack >= -tolerance)


@dataclass(frozen=True)
class AuditReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    tolerance: float
    expected_to_fail: bool = False
    metadata: dict = field(default_factory=dict)

    @classmethod
    def build(cls, name, lhs, rhs, tolerance, expected_to_fail=False, **metadata):
        lhs, rhs, tolerance = float(lhs), float(rhs), float(tolerance)
        slack = lhs - rhs
        return cls(
            name=name,
            lhs=lhs,
            rhs=rhs,
            slack=slack,
            passed=decide(slack, tolerance, expected_to_fail),
            tolerance=tolerance,
            expected_to_fail=bool(expected_to_fail),
            metadata=_plain(metadata),
        )

    @property
    def pass_(self):
        return self.passed

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["passed"] = d.pop("pass")
        return cls(**d)

    def consistent(self):
        """True when the stored pass flag matches the stored numbers."""
        return self.passed == decide(self.slack, self.tolerance, self.expected_to_fail)


def combine(name, reports, **metadata):
    """Conjunction of several reports, keeping the worst slack."""
    reports = list(reports)
    worst = min(reports, key=lambda r: r.slack + r.tolerance if not r.expected_to_fail else -r.slack)
    ok = all(r.passed for r in reports)
    return AuditReport(
        name=name,
        lhs=worst.lhs,
        rhs=worst.rhs,
        slack=worst.slack,
        passed=ok,
        tolerance=worst.tolerance,
        expected_to_fail=worst.expected_to_fail,
        metadata=_plain({**metadata, "parts": [r.to_dict() for r in reports]}),
    )


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def reports_from_json(text):
    return [AuditReport.from_dict(d) for d in json.loads(text)]


def reports_to_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "lhs", "rhs", "slack", "pass"])
    for r in reports:
        w.writerow([r.name, repr(r.lhs), repr(r.rhs), repr(r.slack), str(r.passed).lower()])
    return buf.getvalue()
