import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from ncdstbc.code_construction import CyclicCodeSpec
from ncdstbc.errors import ConfigurationError, SweepError
from ncdstbc.harness import (
    BlerPoint,
    ExperimentConfig,
    compare_codes,
    covariance_test,
    emit_csv,
    format_csv,
    power_at_bler,
    read_csv,
    relay_failure_experiment,
    run_bler,
    tail_slope,
    wilson_interval,
)

DATA = Path(__file__).parent / "data"
GOLDEN = ExperimentConfig(
    spec=CyclicCodeSpec.from_v(4, [1, 3]),
    powers_db=[0.0, 5.0, 10.0, 15.0],
    seed=2024,
    max_trials=3000,
    target_errors=50,
)


def small(v=(1, 3), L=8, **kw):
    base = dict(spec=CyclicCodeSpec.from_v(L, list(v)), powers_db=[10.0, 20.0], seed=11, max_trials=2000)
    base.update(kw)
    return ExperimentConfig(**base)


# -- run_bler ------------------------------------------------------------------
def test_high_power_sanity_bound():
    cfg = ExperimentConfig(CyclicCodeSpec.from_v(4, [1, 3]), [60.0], seed=1, max_trials=10_000)
    (pt,) = run_bler(cfg)
    assert pt.trials == 10_000
    assert pt.bler <= 1e-3


def test_zero_power_is_guessing():
    cfg = ExperimentConfig(CyclicCodeSpec.from_v(16, [11, 7, 3, 1]), [-math.inf], seed=2, max_trials=5000)
    (pt,) = run_bler(cfg)
    assert pt.ci_low <= 1 - 1 / 16 <= pt.ci_high


def test_point_invariants():
    for pt in run_bler(small(powers_db=[0.0, 10.0, 20.0], target_errors=30)):
        assert 0 <= pt.bler <= 1
        assert pt.bler == pt.errors / pt.trials
        assert pt.ci_low <= pt.bler <= pt.ci_high


def test_early_stop_counts_exact_denominator():
    full = run_bler(small(powers_db=[5.0], max_trials=4000, chunk=512))[0]
    stopped = run_bler(small(powers_db=[5.0], max_trials=4000, chunk=512, target_errors=25))[0]
    assert stopped.errors == 25
    assert stopped.trials < full.trials
    # the truncated run is a prefix of the full one: errors in the prefix match
    prefix = run_bler(small(powers_db=[5.0], max_trials=stopped.trials, chunk=512))[0]
    assert prefix.errors == 25


def test_chunk_size_does_not_change_result():
    a = run_bler(small(chunk=4096, target_errors=40))
    b = run_bler(small(chunk=97, target_errors=40))
    assert format_csv(a) == format_csv(b)


def test_worker_count_byte_identical(tmp_path):
    outputs = []
    for workers in (1, 8):
        path = tmp_path / f"w{workers}.csv"
        run_bler(small(workers=workers, chunk=256, target_errors=60, output=str(path)))
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_monotone_for_fully_diverse_code():
    pts = run_bler(small(powers_db=[0.0, 5.0, 10.0, 15.0, 20.0], target_errors=100, max_trials=20_000))
    for prev, cur in zip(pts, pts[1:]):
        assert cur.bler <= prev.bler or cur.ci_low <= prev.ci_high


def test_invalid_configs_fail_before_simulation():
    with pytest.raises(ConfigurationError):
        run_bler(small(decoder="reduced-scalar"))
    with pytest.raises(ConfigurationError):
        run_bler(small(decoder="nope"))
    with pytest.raises(ConfigurationError):
        run_bler(small(seed=-1))
    with pytest.raises(ConfigurationError):
        run_bler(small(max_trials=0))
    with pytest.raises(ConfigurationError):
        run_bler(small(failed=(0, 1)))


def test_wilson_interval_contains_estimate():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(100, 100)
    assert hi == pytest.approx(1.0) and lo > 0.95


# -- csv -----------------------------------------------------------------------
def test_empty_sweep_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv([], path)
    assert path.read_bytes() == b"P_dB,trials,errors,bler,ci_low,ci_high\n"
    assert read_csv(path) == []


def test_csv_round_trip_exact(tmp_path):
    pts = run_bler(small(target_errors=20))
    pts.append(BlerPoint(-math.inf, 3, 1, 1 / 3, 0.1, 0.9))
    path = tmp_path / "rt.csv"
    emit_csv(pts, path)
    back = read_csv(path)
    assert back == pts
    assert b"\r" not in path.read_bytes()


def test_unwritable_path():
    with pytest.raises(ConfigurationError):
        emit_csv([], "/nonexistent-dir/out.csv")


def test_golden_file():
    got = format_csv(run_bler(GOLDEN)).encode()
    assert got == (DATA / "golden_r2_l4.csv").read_bytes()


# -- compare -------------------------------------------------------------------
def test_identical_configs_have_zero_gap():
    cfg = small(powers_db=[10.0, 20.0, 30.0], target_errors=100, max_trials=20_000)
    rep = compare_codes(cfg, replace(cfg))
    assert rep.gap_db == pytest.approx(0.0, abs=1e-12)


def test_unbracketed_sweep_asks_to_extend():
    cfg = small(powers_db=[0.0, 2.0], target_errors=50)
    with pytest.raises(SweepError, match="extend sweep"):
        compare_codes(cfg, replace(cfg))


def test_compare_requires_matching_codes():
    with pytest.raises(ConfigurationError):
        compare_codes(small(), small(L=16, v=(1, 3)))


def test_gcd_failing_code_flattens():
    powers = [10.0, 20.0, 30.0]
    good = run_bler(small(v=(1, 3), powers_db=powers, target_errors=200, max_trials=20_000))
    bad = run_bler(small(v=(2, 2), powers_db=powers, target_errors=200, max_trials=20_000))
    ratios = [b.bler / g.bler for g, b in zip(good, bad)]
    assert ratios[0] < ratios[1] < ratios[2]
    assert all(b.ci_high >= 0.45 for b in bad)


def test_power_at_bler_interpolates_in_log_domain():
    pts = [BlerPoint(0.0, 100, 50, 0.1, 0, 1), BlerPoint(10.0, 100, 1, 0.001, 0, 1)]
    assert power_at_bler(pts, 0.01) == pytest.approx(5.0)


# -- relay failure -------------------------------------------------------------
def test_failure_d0_matches_run_bler():
    cfg = small(spec=CyclicCodeSpec.from_v(16, [11, 11, 11, 11]), target_errors=30)
    rep = relay_failure_experiment(cfg, 0)
    assert rep.intact == rep.degraded == run_bler(cfg)


def test_failure_count_bounds():
    cfg = small(spec=CyclicCodeSpec.from_v(16, [11, 11, 11, 11]))
    with pytest.raises(ConfigurationError):
        relay_failure_experiment(cfg, 4)
    with pytest.raises(ConfigurationError):
        relay_failure_experiment(cfg, -1)


@pytest.mark.slow
def test_failure_slope_ratio():
    cfg = ExperimentConfig(
        CyclicCodeSpec.from_v(16, [11, 11, 11, 11]),
        [10.0, 15.0, 20.0, 25.0, 30.0],
        seed=3,
        max_trials=400_000,
        target_errors=400,
    )
    rep = relay_failure_experiment(cfg, 1)
    assert rep.failed == (3,)
    for a, b in zip(rep.intact, rep.degraded):
        assert b.bler > a.bler
    ratio = tail_slope(rep.intact) / tail_slope(rep.degraded)
    assert 4 / 3 * 0.7 <= ratio <= 4 / 3 * 1.3


def test_tail_slope_needs_two_points():
    with pytest.raises(SweepError):
        tail_slope([BlerPoint(0.0, 10, 1, 0.1, 0, 1)])
    pts = [BlerPoint(10.0 * i, 1, 1, 10.0 ** (-2 * i), 0, 1) for i in range(4)]
    assert tail_slope(pts) == pytest.approx(-2.0)


# -- covariance ----------------------------------------------------------------
def test_covariance_test_report():
    res = covariance_test(4, 100.0, 20_000, seed=9)
    assert res["cov"].shape == (8, 8)
    assert res["max_diag_rel_dev"] < 0.06
    assert res["max_offdiag_rel"] < 0.06
    assert res["mean_norm"] < 0.1 * math.sqrt(res["gamma"])
    again = covariance_test(4, 100.0, 20_000, seed=9)
    assert np.array_equal(res["cov"], again["cov"])
