import math

import numpy as np
import pytest

from ncdstbc.channel_sim import (
    PowerConfig,
    effective_noise_stats,
    sample_channel,
    transmit,
    transmit_equivalent,
)
from ncdstbc.code_construction import CyclicCodeSpec, build_codebook
from ncdstbc.errors import ConfigurationError
from ncdstbc.harness import covariance_test
from ncdstbc.rng import CounterRNG


def test_power_split_defaults():
    p = PowerConfig.split(100.0, 4)
    assert p.P1 == 50.0 and p.P2 == 12.5
    assert p.P_total == pytest.approx(p.P1 + 4 * p.P2)
    assert p.T == 8
    assert p.rho == pytest.approx(50 * 12.5 * 8 / 51)
    assert PowerConfig.from_db(20.0, 4) == p


def test_power_split_validation():
    with pytest.raises(ConfigurationError):
        PowerConfig(10.0, 5.0, 1.0, 4)
    with pytest.raises(ConfigurationError):
        PowerConfig.split(10.0, 4, p1_frac=0.5, p2_each=0.2)
    p = PowerConfig.split(10.0, 4, p1_frac=0.2, p2_each=0.2)
    assert p.P1 == pytest.approx(2.0) and p.P2 == pytest.approx(2.0)


def test_sample_channel_moments():
    ch = sample_channel(4, CounterRNG(5), count=100_000)
    assert abs(np.mean(np.abs(ch.f) ** 2) - 1.0) < 0.02
    assert abs(np.mean(np.abs(ch.g) ** 2) - 1.0) < 0.02
    m = ch.f.mean(axis=0)
    assert np.all(np.abs(m.real) < 0.01) and np.all(np.abs(m.imag) < 0.01)
    # unit total variance split evenly over real and imaginary parts
    assert abs(np.var(ch.relay_noise.real) - 0.5) < 0.01
    assert abs(np.var(ch.relay_noise.imag) - 0.5) < 0.01


def test_sample_channel_replay():
    a = sample_channel(3, CounterRNG(9), start=17)
    b = sample_channel(3, CounterRNG(9), start=10, count=10).trial(7)
    for name in ("f", "g", "relay_noise", "dest_noise"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_failure_mask():
    ch = sample_channel(4, CounterRNG(1), failure_mask=[False, True, False, False])
    np.testing.assert_array_equal(ch.alive, [True, False, True, True])
    with pytest.raises(ConfigurationError):
        sample_channel(4, CounterRNG(1), failure_mask=[True])


def _zero_noise(ch):
    ch.relay_noise = np.zeros_like(ch.relay_noise)
    ch.dest_noise = np.zeros_like(ch.dest_noise)
    return ch


def test_transmit_noiseless_single_relay():
    book = build_codebook(CyclicCodeSpec.from_v(4, [1]))
    p = PowerConfig.split(10.0, 1)
    ch = _zero_noise(sample_channel(1, CounterRNG(2)))
    k = 3
    s = book.diag_powers()[k] * book.x
    rx = transmit(book, k, p, ch)
    np.testing.assert_allclose(rx.y, math.sqrt(p.rho) * ch.g[0] * ch.f[0] * s, atol=1e-14)
    assert np.vdot(s, s).real == pytest.approx(1.0, abs=1e-15)


def test_transmit_dual_path_agreement():
    book = build_codebook(CyclicCodeSpec.from_v(16, [11, 7, 3, 1]))
    p = PowerConfig.from_db(25.0, 4)
    ch = sample_channel(4, CounterRNG(3), count=500)
    k = CounterRNG(3, 1).integers(0, 500, 16)
    a = transmit(book, k, p, ch).y
    b = transmit_equivalent(book, k, p, ch).y
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


def test_transmit_dual_path_with_dead_relay():
    book = build_codebook(CyclicCodeSpec.from_v(16, [11, 11, 11, 11]))
    p = PowerConfig.from_db(15.0, 4)
    ch = sample_channel(4, CounterRNG(4), failure_mask=[False, False, True, False], count=50)
    k = np.arange(50) % 16
    np.testing.assert_allclose(transmit(book, k, p, ch).y, transmit_equivalent(book, k, p, ch).y, atol=1e-12)


def test_all_relays_dead_gives_destination_noise():
    book = build_codebook(CyclicCodeSpec.from_v(8, [1, 3]))
    p = PowerConfig.from_db(20.0, 2)
    ch = sample_channel(2, CounterRNG(5), failure_mask=[True, True])
    np.testing.assert_array_equal(transmit(book, 5, p, ch).y, ch.dest_noise)


def test_noise_stats_no_relay_power():
    p = PowerConfig(10.0, 10.0, 0.0, 2)
    _, cov = effective_noise_stats(p, [1 + 1j, 2], 50_000, CounterRNG(6))
    assert np.max(np.abs(cov - np.eye(4))) < 0.03


def test_noise_stats_match_gamma():
    res = covariance_test(4, 100.0, 100_000, seed=7)
    assert res["max_diag_rel_dev"] <= 0.03
    assert res["max_offdiag_rel"] < 0.03
    assert res["mean_norm"] < 0.05


def test_noise_stats_identical_for_any_diagonal_unitary():
    book = build_codebook(CyclicCodeSpec.from_v(8, [1, 3, 5, 7]))
    p = PowerConfig.split(100.0, 4)
    g = sample_channel(4, CounterRNG(8)).g
    gamma = float(p.gamma(g))
    for mats in (np.stack(book.relay_matrices), None):
        _, cov = effective_noise_stats(p, g, 100_000, CounterRNG(9), mats)
        assert np.max(np.abs(cov - gamma * np.eye(8))) < 0.03 * gamma


def test_noise_stats_non_unitary_negative_control():
    T = 8
    shift = np.roll(np.eye(T), 1, axis=1)
    mats = np.stack([np.eye(T) + 0.8 * shift] * 4)
    res = covariance_test(4, 100.0, 100_000, seed=7, relay_mats=mats)
    assert res["max_offdiag_rel"] > 0.2
