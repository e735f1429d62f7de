from pytest import fixture, mark

from backend.models import ExponentPair, Regime, Verdict
from backend.services.selftest_service import MC_POINTS, relative_gap, selftest_service
from backend.services.verification_service import verification_service


@fixture(scope="module")
def report():
    return selftest_service.run(seed=0, include_oracles=False)


def test_relative_gap():
    assert relative_gap(1.1, 1.0) == 0.10000000000000009
    assert relative_gap(1e-3, 0.0) == 1e-3


def test_default_sweep(report):
    assert len(report.sweep.records) == 441
    assert report.sweep.violations == 0
    assert not report.sweep.skipped


def test_additional_verdicts_hold(report):
    assert all(record.verdict.verdict is Verdict.HOLDS_STRICT for record in report.verdicts)


def test_identities_pass(report):
    failing = {check.name: check.worst_gap for check in report.identities if not check.passed}
    assert failing == {}
    assert report.failed_identities == []


def test_identity_records(report):
    rows = [check.to_dict() for check in report.identities]
    assert all(row["method"] == "identity" for row in rows)
    assert "threshold_algebra" in {row["inputs"]["check"] for row in rows}


def test_monte_carlo_points_cover_regimes_and_bands():
    covered = set()
    for alpha1, alpha2, rho in MC_POINTS:
        assert alpha1 > -0.5 and alpha2 > -0.5
        band = 0 if abs(rho) <= 0.2 else 1 if abs(rho) <= 0.6 else 2
        covered.add((verification_service.classify_regime(ExponentPair(alpha1, alpha2)), band))
    regimes = (Regime.SAME_SIGN_POSITIVE, Regime.SAME_SIGN_NEGATIVE, Regime.OPPOSITE_SIGN)
    assert covered == {(regime, band) for regime in regimes for band in range(3)}


@mark.slow
def test_selftest_with_oracles():
    full = selftest_service.run(seed=0)
    names = {check.name for check in full.identities}
    assert {"quadrature_vs_closed_form", "monte_carlo_4_sigma"} <= names
    assert full.failed_identities == []
    assert full.violations == 0
