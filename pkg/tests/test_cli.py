import numpy as np
import pytest

from neharilab import cli


SMALL_CONFIG = """\
[problem]
n = 3
alpha = 0.25
mu = 1.0
p = 2.0
q = 0.5
gamma3 = 1.3
gamma4 = 1.0

[grid]
kind = radial
r = 14.0
m = 64
grading = 2.0

[solver]
tol = 1e-4
max_iters = 300

[extremal]
sigmas = 0.5,0.7,1.0,1.4,2.0
families = gaussian,inverse_poly:1.5
descent_iters = 120

[run]
seed = 7
"""


@pytest.fixture()
def small_config(tmp_path):
    path = tmp_path / "cfg.ini"
    path.write_text(SMALL_CONFIG)
    return str(path)


@pytest.fixture()
def bad_config(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(SMALL_CONFIG.replace("mu = 1.0", "mu = 2.6"))  # 2a + mu >= N
    return str(path)


def test_validate_ok(small_config, capsys):
    assert cli.main(["validate", "--config", small_config]) == 0
    out = capsys.readouterr().out
    assert "p window (1.5, 4.5)" in out


def test_validate_rejects_bad_config(bad_config, capsys):
    assert cli.main(["validate", "--config", bad_config]) == 1
    err = capsys.readouterr().err
    assert "WeightViolation" in err
    assert "2*alpha + mu" in err


def test_missing_config_is_usage_error(capsys):
    assert cli.main(["validate", "--config", "/nonexistent.ini"]) == 2


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        cli.main(["frobnicate"])
    assert err.value.code == 2


def test_fibering_reference_output(capsys):
    assert cli.main(["fibering", "--triple", "1,1,1", "--p", "2", "--q", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "t_n = 0.654653670708" in out
    assert "Lambda_n = 0.302676959271" in out
    assert "Lambda_e = 0.127259985015" in out


def test_fibering_with_lambda_prints_roots(capsys):
    assert cli.main(["fibering", "--triple", "1,1,1", "--p", "2", "--q", "0.5",
                     "--lambda", "0.15"]) == 0
    out = capsys.readouterr().out
    assert "t_plus" in out and "t_minus" in out
    assert "branch of t=1: NotOnNehari" in out


def test_fibering_malformed_triple_usage_error(capsys):
    assert cli.main(["fibering", "--triple", "1,1", "--p", "2", "--q", "0.5"]) == 2


def test_lambda_star_with_artifacts(small_config, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    snap = tmp_path / "min.json"
    code = cli.main(["lambda-star", "--config", small_config,
                     "--trace-csv", str(trace), "--snapshot", str(snap)])
    assert code == 0
    out = capsys.readouterr().out
    assert "lambda_star" in out and "lambda_sub" in out
    assert trace.exists() and snap.exists()
    lam_star = float(next(l for l in out.splitlines() if l.startswith("lambda_star")).split("=")[1])
    lam_sub = float(next(l for l in out.splitlines() if l.startswith("lambda_sub")).split("=")[1])
    assert lam_sub == pytest.approx(lam_star * 2.0**0.75 / 4.0, rel=1e-10)


def test_solve_writes_snapshots(small_config, tmp_path, capsys):
    outdir = tmp_path / "run"
    code = cli.main(["solve", "--config", small_config, "--lambda-frac", "0.5",
                     "--out", str(outdir)])
    out = capsys.readouterr().out
    assert code == 0
    assert "converged = yes" in out
    assert (outdir / "solution_plus.json").exists()
    assert (outdir / "solution_minus.json").exists()
    import neharilab as nl
    fn, prm_dict, extra = nl.load_snapshot(outdir / "solution_plus.json")
    assert extra["branch"] == "Nplus"
    assert extra["residual"] <= 1e-4


def test_solve_unreachable_lambda_is_domain_error(small_config, capsys):
    # a lambda far above every sampled ray surfaces RayMissesNehari -> exit 1
    code = cli.main(["solve", "--config", small_config, "--lambda", "1e9"])
    err = capsys.readouterr().err
    assert code == 1
    assert "RayMissesNehari" in err


def test_lambda_star_r_sweep_report(small_config, capsys):
    code = cli.main(["lambda-star", "--config", small_config, "--r-sweep", "12,16"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("R = ") == 2
    assert "delta = " in out


def test_sweep_csv_deterministic(small_config, tmp_path, capsys):
    out1 = tmp_path / "s1.csv"
    out2 = tmp_path / "s2.csv"
    args = ["sweep", "--config", small_config, "--points", "5",
            "--frac-min", "0.3", "--frac-max", "0.6", "--spacing", "linear"]
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()
    header = out1.read_text().splitlines()[0]
    assert header == ("lambda,energy_plus,energy_minus,t_plus,t_minus,norm_minus,"
                      "residual_plus,residual_minus,converged_plus,converged_minus")


def test_cross_check_within_tolerance(small_config, capsys):
    code = cli.main(["cross-check", "--config", small_config, "--box-m", "16",
                     "--tolerance", "0.05"])
    out = capsys.readouterr().out
    assert code == 0
    assert "relative gap" in out


def test_cross_check_flags_disagreement(small_config, capsys):
    # a deliberately impossible tolerance makes the gap check fail (exit 1)
    code = cli.main(["cross-check", "--config", small_config, "--box-m", "8",
                     "--tolerance", "1e-6"])
    out = capsys.readouterr().out
    assert code == 1
    assert "above tolerance" in out


def test_invariants_pass(small_config, capsys):
    assert cli.main(["invariants", "--config", small_config]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("PASS") >= 8


def test_invariants_corrupted_constant_fails_by_name(small_config, capsys):
    assert cli.main(["invariants", "--config", small_config, "--corrupt-cpq"]) == 1
    out = capsys.readouterr().out
    assert "FAIL c_pq_matches_qn_maximum" in out
    assert "failed invariants: c_pq_matches_qn_maximum" in out


def test_invariants_deterministic_given_seed(small_config, capsys):
    cli.main(["invariants", "--config", small_config, "--seed", "3"])
    first = capsys.readouterr().out
    cli.main(["invariants", "--config", small_config, "--seed", "3"])
    second = capsys.readouterr().out
    assert first == second
