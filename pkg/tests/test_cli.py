import subprocess
import sys

import pytest

from ncdstbc.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from ncdstbc.config_io import load_spec, parse_powers
from ncdstbc.harness import read_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_design_reports_code(capsys, tmp_path):
    spec_file = tmp_path / "code.cfg"
    code, out, _ = run(capsys, "design", "--L", "16", "--v", "11,7,3,1", "--out", str(spec_file))
    assert code == EXIT_OK
    rows = dict(line.split(None, 1) for line in out.splitlines())
    assert rows["gcd_full_diversity"] == "True"
    assert "coding_gain" in out and "A_4" in out
    spec = load_spec(spec_file)
    assert spec.u == (11, 7, 3, 1, 0, 0, 0, 0)


def test_check_detects_failing_code(capsys, tmp_path):
    csv_path = tmp_path / "check.csv"
    code, out, _ = run(capsys, "check", "--R", "2", "--L", "8", "--u", "2,2,0,0", "--csv", str(csv_path))
    assert code == EXIT_OK
    rows = dict(line.split(None, 1) for line in out.splitlines())
    assert rows["gcd_test"] == "False"
    assert rows["fully_diverse"] == "False"
    assert rows["agree"] == "True"
    assert csv_path.read_text().startswith("key,value\n")


def test_gain_search(capsys):
    code, out, _ = run(capsys, "gain-search", "--R", "2", "--L", "8")
    assert code == EXIT_OK
    assert "coding_gain" in out


def test_simulate_to_stdout_and_file(capsys, tmp_path):
    args = ["simulate", "--L", "4", "--v", "1,3", "--powers", "0:10:5", "--seed", "4", "--max-trials", "500"]
    code, out, err = run(capsys, *args)
    assert code == EXIT_OK
    assert out.splitlines()[0] == "P_dB,trials,errors,bler,ci_low,ci_high"
    assert len(out.splitlines()) == 4
    assert "P_dB" in err
    path = tmp_path / "sim.csv"
    code, _, _ = run(capsys, *args, "-o", str(path))
    assert code == EXIT_OK
    assert path.read_text() == out


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "# experiment\nR = 2\nL = 4\nu = 1,3,0,0\ngbh_kind = dft\n"
        "powers = 0,10\nseed = 7\nmax_trials = 300\ndecoder = full\n"
    )
    code, out_file, _ = run(capsys, "simulate", "--spec", str(cfg))
    assert code == EXIT_OK
    code, out_flag, _ = run(capsys, "simulate", "--spec", str(cfg), "--seed", "8")
    assert code == EXIT_OK and out_flag != out_file
    code, out_same, _ = run(
        capsys, "simulate", "--R", "2", "--L", "4", "--u", "1,3,0,0", "--gbh-kind", "dft",
        "--powers", "0,10", "--seed", "7", "--max-trials", "300", "--decoder", "full",
    )
    assert out_same == out_file
    code, out_pow, _ = run(capsys, "simulate", "--spec", str(cfg), "--powers", "5")
    assert len(out_pow.splitlines()) == 2


def test_missing_seed_is_config_error(capsys):
    code, _, err = run(capsys, "simulate", "--L", "4", "--v", "1,3", "--powers", "0")
    assert code == EXIT_CONFIG
    assert "seed" in err


def test_bad_spec_is_config_error(capsys):
    code, _, _ = run(capsys, "design", "--R", "2", "--L", "4", "--u", "1,2,3")
    assert code == EXIT_CONFIG
    code, _, _ = run(capsys, "design", "--spec", "/no/such/file.cfg")
    assert code == EXIT_CONFIG


def test_unsatisfied_decoder_constraint_is_config_error(capsys):
    code, _, err = run(
        capsys, "simulate", "--L", "16", "--v", "11,7,3,1", "--powers", "10",
        "--seed", "1", "--decoder", "reduced-scalar",
    )
    assert code == EXIT_CONFIG
    assert "reduced-scalar" in err or "equal" in err


def test_unbracketed_compare_is_config_error(capsys):
    code, _, err = run(
        capsys, "compare", "--a-L", "16", "--a-v", "11,7,3,1", "--b-L", "16", "--b-v", "11,11,11,11",
        "--powers", "0,1", "--seed", "1", "--max-trials", "200",
    )
    assert code == EXIT_CONFIG
    assert "extend sweep" in err


def test_numeric_violation_exit_code(capsys, monkeypatch):
    from ncdstbc import cli
    from ncdstbc.errors import SingularMatrixError

    def boom(*a, **k):
        raise SingularMatrixError("not positive definite")

    monkeypatch.setattr(cli, "run_bler", boom)
    code, _, err = run(capsys, "simulate", "--L", "4", "--v", "1,3", "--powers", "0", "--seed", "1")
    assert code == EXIT_NUMERIC
    assert "not positive definite" in err


def test_failure_and_cov_test(capsys, tmp_path):
    out = tmp_path / "fail.csv"
    code, _, err = run(
        capsys, "failure", "--L", "16", "--v", "11,11,11,11", "--powers", "10,20",
        "--seed", "3", "--max-trials", "500", "--count", "1", "-o", str(out),
    )
    assert code == EXIT_OK
    assert "silent relays [3]" in err
    assert len(read_csv(tmp_path / "fail_intact.csv")) == 2
    assert len(read_csv(tmp_path / "fail_degraded.csv")) == 2
    code, text, _ = run(capsys, "cov-test", "--samples", "5000", "--seed", "2")
    assert code == EXIT_OK and "max_offdiag_rel" in text


def test_compare_reports_gap(capsys):
    code, out, _ = run(
        capsys, "compare", "--a-L", "8", "--a-v", "1,3", "--b-L", "8", "--b-v", "1,3",
        "--powers", "0:30:10", "--seed", "2", "--max-trials", "3000", "--target-errors", "60",
    )
    assert code == EXIT_OK
    rows = dict(line.split(None, 1) for line in out.splitlines())
    assert float(rows["gap_dB"]) == 0.0


def test_parse_powers_range_is_inclusive():
    assert parse_powers("10:30:5") == [10.0, 15.0, 20.0, 25.0, 30.0]
    assert parse_powers("-inf,0") == [float("-inf"), 0.0]


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ncdstbc.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "ncdstbc" in res.stdout


def test_argparse_rejects_unknown_decoder():
    with pytest.raises(SystemExit):
        main(["simulate", "--decoder", "magic"])
