import json

from click.testing import CliRunner
from pytest import approx, fixture, mark, raises

from backend.cli import cli, parse_grid, run
from backend.errors import UsageError


@fixture
def runner():
    return CliRunner()


def _invoke(runner, args):
    return runner.invoke(cli, args, obj={"output": "", "code": 0}, catch_exceptions=False)


@mark.parametrize("text expected".split(),
                  (("0.5", [0.5]),
                   ("-0.9,-0.5,2", [-0.9, -0.5, 2.0]),
                   ("0:0.9:0.1", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
                   ("1:0:-0.5", [1.0, 0.5, 0.0]),
                   ("0.5:4:0.5", [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0])))
def test_parse_grid(text, expected):
    assert parse_grid(text) == expected


@mark.parametrize("text", ("", "a,b", "0:1", "0:1:0", "1:0:0.1", "0:x:0.1", "1,,2"))
def test_parse_grid_malformed(text):
    with raises(UsageError):
        parse_grid(text)


def test_verify_bivariate_json(capsys):
    code = run(["verify", "bivariate", "--alpha1", "-0.5", "--alpha2", "2", "--rho", "0.5", "--format", "json"])
    out = capsys.readouterr().out
    record = json.loads(out)
    assert code == 0
    assert record["ratio"] == approx(0.875, rel=1e-15)
    assert record["verdict"] == "HoldsStrict"
    assert record["statement"] == "BivariateOppositeGPI"


def test_ratio_independence(capsys):
    code = run(["ratio", "--alpha1", "2", "--alpha2", "2", "--rho", "0", "--format", "json"])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["ratio"] == 1.0


def test_ratio_even_exponent(capsys):
    code = run(["ratio", "--alpha1", "-0.5", "--m", "1", "--rho", "0.5", "--format", "json"])
    row = json.loads(capsys.readouterr().out)
    assert code == 0
    assert row["ratio"] == approx(0.875)
    assert row["method"] == "even_exponent"


def test_ratio_rho_one_uses_beta_ratio(capsys):
    run(["ratio", "--alpha1", "1", "--alpha2", "1", "--rho", "1", "--format", "json"])
    row = json.loads(capsys.readouterr().out)
    assert row["ratio"] == approx(1.5707963267948966, rel=1e-11)
    assert row["method"] == "beta_ratio"


def test_moment_joint_rho_one(capsys):
    code = run(["moment", "joint", "--alpha1", "1", "--alpha2", "1", "--rho", "1", "--format", "json"])
    row = json.loads(capsys.readouterr().out)
    assert code == 0
    assert row["value"] == approx(1.0, rel=1e-12)
    assert row["method"] == "limit_rho_one"


def test_moment_marginal(capsys):
    run(["moment", "marginal", "--alpha1", "2", "--sigma1", "3", "--format", "json"])
    assert json.loads(capsys.readouterr().out)["value"] == approx(9.0, rel=1e-12)


def test_domain_error_exit_code(capsys):
    code = run(["moment", "joint", "--alpha1", "-1.5", "--alpha2", "2"])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.out == ""
    assert len(captured.err.strip().splitlines()) == 1


def test_rho_between_cap_and_one_is_rejected(capsys):
    code = run(["moment", "joint", "--alpha1", "1", "--alpha2", "1", "--rho", "0.999"])
    assert code == 1
    assert capsys.readouterr().out == ""


def test_unknown_flag_exit_code(capsys):
    code = run(["ratio", "--alpha1", "1", "--bogus", "2"])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_malformed_grid_exit_code(capsys):
    code = run(["sweep", "--alpha1-grid", "0:1:0", "--alpha2-grid", "2", "--rho-grid", "0.5"])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.out == ""


def test_missing_exponent_exit_code(capsys):
    assert run(["verify", "bivariate", "--alpha1", "1"]) == 1


def test_sweep_json(capsys):
    code = run(["sweep", "--alpha1-grid=-0.5,2", "--alpha2-grid", "2", "--rho-grid", "0.5", "--format", "json"])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert len(lines) == 3
    assert [json.loads(line)["ratio"] for line in lines[:2]] == [approx(0.875), approx(1.5)]
    assert json.loads(lines[-1])["summary"]["violations"] == 0


def test_sweep_json_byte_identical(capsys):
    args = ["sweep", "--alpha1-grid=-0.9:0.9:0.6", "--alpha2-grid", "0.5,4", "--rho-grid=-0.5,0.5", "--format", "json"]
    run(args)
    first = capsys.readouterr().out
    run(args + ["--workers", "3"])
    assert capsys.readouterr().out == first


def test_sweep_csv(capsys):
    code = run(["sweep", "--alpha1-grid=-0.5", "--alpha2-grid", "2", "--rho-grid", "0,0.5", "--format", "csv"])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert lines[0] == "inputs,statement,ratio,threshold,margin,verdict,tolerance,error_bound,method"
    assert len(lines) == 3


def test_verify_one_dim(runner):
    result = _invoke(runner, ["verify", "one-dim", "--alpha1", "1", "--alpha2", "1", "--format", "json"])
    assert result.exit_code == 0


def test_verify_monotonicity_text(capsys):
    code = run(["verify", "monotonicity", "--alpha1", "-0.5", "--alpha2", "2", "--z-grid", "0.1:0.9:0.1"])
    out = capsys.readouterr().out
    assert code == 0
    assert "MonotoneDecreasing" in out
    assert "HoldsStrict" in out


def test_oracle_isserlis(capsys):
    code = run(["oracle", "isserlis", "--alpha1", "2", "--alpha2", "4", "--rho", "0.5", "--format", "json"])
    row = json.loads(capsys.readouterr().out)
    assert code == 0
    assert row["value"] == approx(6.0)
    assert row["method"] == "isserlis"


def test_oracle_isserlis_rejects_odd(capsys):
    assert run(["oracle", "isserlis", "--alpha1", "3", "--alpha2", "4"]) == 1


def test_oracle_mc_seed_reproducible(capsys):
    args = ["oracle", "mc", "--alpha1", "1", "--alpha2", "1", "--rho", "0.3", "--samples", "20000", "--seed", "5",
            "--format", "json"]
    run(args)
    first = capsys.readouterr().out
    run(args)
    assert capsys.readouterr().out == first
    assert json.loads(first)["method"] == "monte_carlo"


def test_oracle_mc_rejects_negative_seed(capsys):
    assert run(["oracle", "mc", "--alpha1", "1", "--alpha2", "1", "--seed", "-1"]) == 1


def test_oracle_quad(capsys):
    code = run(["oracle", "quad", "--alpha1", "2", "--alpha2", "2", "--rho", "0.5", "--format", "json"])
    row = json.loads(capsys.readouterr().out)
    assert code == 0
    assert row["value"] == approx(1.5, rel=1e-7)


def test_logs_stay_off_stdout(capsys):
    run(["ratio", "--alpha1", "2", "--alpha2", "2", "--rho", "0.3", "--format", "json", "--verbose"])
    captured = capsys.readouterr()
    assert json.loads(captured.out)["ratio"] == approx(1.18)
    assert "ratio" in captured.err


@mark.slow
def test_selftest_full(capsys):
    code = run(["selftest", "--format", "json"])
    lines = capsys.readouterr().out.splitlines()
    summary = json.loads(lines[-1])["summary"]
    assert code == 0
    assert summary["violations"] == 0
    assert summary["failed_identities"] == []


@mark.parametrize("args", (["moment", "marginal", "--alpha1", "1000"],
                           ["ratio", "--alpha1", "5000", "--alpha2", "5000", "--rho", "1"],
                           ["oracle", "quad", "--alpha1", "2", "--alpha2", "2", "--sigma1", "1e200", "--sigma2", "1e200"]))
def test_overflow_exit_code(capsys, args):
    code = run(args)
    captured = capsys.readouterr()
    assert code == 1
    assert captured.out == ""
    assert len(captured.err.strip().splitlines()) == 1
