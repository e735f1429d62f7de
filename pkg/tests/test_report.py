import io
import json
import math

import pandas as pd
from pytest import mark, raises

from backend.errors import UsageError
from backend.models import ExponentPair, IdentityCheck, SweepGrid, Verdict
from backend.services.report_service import VERDICT_COLUMNS, report_service
from backend.services.verification_service import verification_service


def _sweep():
    return verification_service.sweep(SweepGrid([-0.5, 2.0], [2.0], [0.0, 0.5]))


def test_verdict_dict_keys():
    record = _sweep().records[0]
    row = report_service.verdict_to_dict(record)
    assert list(row) == VERDICT_COLUMNS
    assert row["inputs"] == {"alpha1": -0.5, "alpha2": 2.0, "rho": 0.0}
    assert row["verdict"] == "Equality"


def test_verdict_json_round_trip():
    for record in _sweep().records:
        line = json.dumps(report_service.verdict_to_dict(record), sort_keys=True)
        assert report_service.verdict_from_dict(json.loads(line)) == record


def test_verdict_from_dict_rejects_garbage():
    with raises(UsageError):
        report_service.verdict_from_dict({"inputs": {}, "verdict": "Maybe"})


def test_render_json_lines_with_summary():
    report = _sweep()
    rows = [report_service.verdict_to_dict(record) for record in report.records]
    output = report_service.render(rows, "json", report_service.sweep_summary(report))
    lines = output.splitlines()
    assert len(lines) == len(rows) + 1
    summary = json.loads(lines[-1])["summary"]
    assert summary["records"] == 4
    assert summary["violations"] == 0
    assert "timestamp" not in summary["metadata"]
    assert json.loads(lines[1])["ratio"] == 0.875


def test_render_json_is_deterministic():
    first = _sweep()
    second = _sweep()
    render = lambda report: report_service.render(
        [report_service.verdict_to_dict(r) for r in report.records], "json", report_service.sweep_summary(report)
    )
    assert render(first) == render(second)


def test_render_csv():
    report = _sweep()
    rows = [report_service.verdict_to_dict(record) for record in report.records]
    frame = pd.read_csv(io.StringIO(report_service.render(rows, "csv")))
    assert list(frame.columns) == VERDICT_COLUMNS
    assert len(frame) == 4
    assert set(frame["verdict"]) <= {verdict.value for verdict in Verdict}
    assert json.loads(frame["inputs"][1]) == {"alpha1": -0.5, "alpha2": 2.0, "rho": 0.5}


def test_render_csv_column_union():
    output = report_service.render([{"inputs": {}, "a": 1}, {"inputs": {}, "b": 2}], "csv")
    assert output.splitlines()[0] == "inputs,a,b"


def test_render_text():
    verdict = verification_service.check_bivariate(ExponentPair(-0.5, 2.0), 0.5)
    row = {"inputs": {"alpha1": -0.5}, "ratio": verdict.ratio, "verdict": verdict.verdict.value}
    output = report_service.render([row], "text")
    assert output == "[alpha1=-0.5] ratio=0.875 verdict=HoldsStrict\n"


@mark.parametrize("fmt", ("yaml", "", "JSON"))
def test_render_rejects_unknown_format(fmt):
    with raises(UsageError):
        report_service.render([], fmt)


def test_identity_without_convergence_renders_valid_json():
    check = IdentityCheck("quadrature_vs_closed_form", 3, math.inf, 1e-7)
    output = report_service.render([check.to_dict()], "json")
    assert "Infinity" not in output
    row = json.loads(output)
    assert row["worst_gap"] is None
    assert row["passed"] is False
    assert "reason" in row
