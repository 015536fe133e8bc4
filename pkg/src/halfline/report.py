"""Check results and verification reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class CheckResult:
    """One verified claim.

    ``mode`` is ``"upper"`` (measured <= target + tol), ``"lower"``
    (measured >= target - tol), ``"abs"`` (|measured - target| <= tol) or
    ``"rel"`` (|measured - target| <= tol |target|).  ``passed`` is
    recomputed from these, never supplied.
    """

    name: str
    measured: float
    target: float
    tol: float
    mode: str = "abs"
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("upper", "lower", "abs", "rel"):
            raise ValueError(f"unknown comparison mode {self.mode!r}")

    @property
    def passed(self) -> bool:
        m, t, tol = self.measured, self.target, self.tol
        if not math.isfinite(m):
            return False
        if self.mode == "upper":
            return bool(m <= t + tol)
        if self.mode == "lower":
            return bool(m >= t - tol)
        if self.mode == "abs":
            return bool(abs(m - t) <= tol)
        return bool(abs(m - t) <= tol * abs(t))

    def to_dict(self) -> dict:
        out = {"name": self.name, "measured": _num(self.measured), "target": _num(self.target),
               "tol": _num(self.tol), "mode": self.mode, "pass": self.passed}
        if self.detail:
            out["detail"] = {k: _jsonable(v) for k, v in sorted(self.detail.items())}
        return out


@dataclass
class VerificationReport:
    entries: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def add(self, entry: CheckResult) -> CheckResult:
        if any(e.name == entry.name for e in self.entries):
            raise ValueError(f"duplicate check name {entry.name!r}")
        self.entries.append(entry)
        return entry

    def extend(self, other: "VerificationReport") -> None:
        for e in other.entries:
            self.add(e)
        self.metadata.update(other.metadata)

    def __getitem__(self, name: str) -> CheckResult:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"checks": [e.to_dict() for e in self.entries],
                "metadata": {k: _jsonable(v) for k, v in sorted(self.metadata.items())},
                "pass": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def _num(v):
    v = float(v)
    if math.isfinite(v):
        return float(repr(v))
    return repr(v)


def _jsonable(v: Any):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in sorted(v.items())}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int,)):
        return v
    try:
        return _num(v)
    except (TypeError, ValueError):
        return str(v)
