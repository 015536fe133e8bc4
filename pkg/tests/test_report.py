import json
import math

import pytest

from halfline.report import CheckResult, VerificationReport


@pytest.mark.parametrize("mode,measured,ok", [
    ("upper", 1.05, True), ("upper", 1.2, False), ("lower", 0.95, True), ("lower", 0.8, False),
    ("abs", 1.09, True), ("abs", 0.8, False), ("rel", 1.09, True), ("rel", 1.2, False)])
def test_modes(mode, measured, ok):
    assert CheckResult("c", measured, 1.0, 0.1, mode).passed is ok


def test_non_finite_fails():
    assert not CheckResult("c", math.nan, 0.0, 1.0, "upper").passed
    assert not CheckResult("c", math.inf, 0.0, 1.0, "lower").passed


def test_report_aggregation_and_json():
    rep = VerificationReport()
    assert rep.passed
    rep.add(CheckResult("a", 0.0, 0.0, 1e-3, detail={"inf": math.inf}))
    with pytest.raises(ValueError):
        rep.add(CheckResult("a", 0.0, 0.0, 1e-3))
    rep.add(CheckResult("b", 2.0, 0.0, 1.0, "upper"))
    assert not rep.passed
    data = json.loads(rep.to_json())
    assert [c["name"] for c in data["checks"]] == ["a", "b"]
    assert data["pass"] is False and data["checks"][0]["pass"] is True
    assert rep["b"].measured == 2.0
    with pytest.raises(ValueError):
        CheckResult("x", 0, 0, 0, "fuzzy")
