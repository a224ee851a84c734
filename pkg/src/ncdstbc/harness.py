"""Monte Carlo BLER experiments.

Trials are addressed by index: trial ``t`` at every power point uses the
same fades, noises and transmitted codeword, drawn from counter-based
streams keyed by the experiment seed. Chunks of trials may be evaluated in
any order or in parallel processes; per-trial error flags are concatenated
in index order and the early-stop rule is applied to that sequence, so the
output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .channel_sim import PowerConfig, db_to_linear, effective_noise_stats, sample_channel, transmit
from .code_construction import CyclicCodeSpec, build_codebook
from .decoders import DECODERS, check_decoder_constraints, decode
from .errors import ConfigurationError, ContractViolation, SweepError
from .rng import CHANNEL_STREAM, NOISE_STREAM, SYMBOL_STREAM, CounterRNG

__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "BlerPoint",
    "GapReport",
    "FailureReport",
    "wilson_interval",
    "run_bler",
    "compare_codes",
    "relay_failure_experiment",
    "tail_slope",
    "covariance_test",
    "emit_csv",
    "format_csv",
    "power_at_bler",
    "read_csv",
]

CSV_COLUMNS = ("P_dB", "trials", "errors", "bler", "ci_low", "ci_high")
DEFAULT_CHUNK = 4096


@dataclass
class ExperimentConfig:
    """Everything a BLER sweep needs. ``seed`` is mandatory."""

    spec: CyclicCodeSpec
    powers_db: Sequence[float]
    seed: int
    decoder: str = "unitary"
    max_trials: int = 100_000
    target_errors: Optional[int] = None
    failed: tuple = ()
    informed: bool = True
    p1_frac: float = 0.5
    p2_each: Optional[float] = None
    workers: int = 1
    chunk: int = DEFAULT_CHUNK
    output: Optional[str] = None

    def validate(self) -> None:
        if self.seed is None or int(self.seed) < 0:
            raise ConfigurationError("a non-negative seed is required")
        if self.max_trials < 1:
            raise ConfigurationError("max_trials must be >= 1")
        if self.target_errors is not None and self.target_errors < 1:
            raise ConfigurationError("target_errors must be >= 1")
        if self.decoder not in DECODERS:
            raise ConfigurationError(f"unknown decoder {self.decoder!r}; choose from {', '.join(DECODERS)}")
        if self.workers < 1 or self.chunk < 1:
            raise ConfigurationError("workers and chunk must be >= 1")
        R = self.spec.R
        if any(not 0 <= j < R for j in self.failed) or len(set(self.failed)) != len(self.failed):
            raise ConfigurationError(f"failed relays must be distinct indices in 0..{R - 1}")
        if len(self.failed) >= R:
            raise ConfigurationError("at least one relay must stay alive")
        PowerConfig.split(1.0, R, self.p1_frac, self.p2_each)
        try:
            check_decoder_constraints(self.decoder, _codebook(self.spec))
        except ContractViolation as exc:
            raise ConfigurationError(str(exc)) from exc

    def power(self, p_db: float) -> PowerConfig:
        return PowerConfig.split(db_to_linear(p_db), self.spec.R, self.p1_frac, self.p2_each)


@dataclass
class BlerPoint:
    P_dB: float
    trials: int
    errors: int
    bler: float
    ci_low: float
    ci_high: float

    def row(self) -> tuple:
        return (self.P_dB, self.trials, self.errors, self.bler, self.ci_low, self.ci_high)


def wilson_interval(errors: int, trials: int, alpha: float = 0.05) -> tuple:
    lo, hi = proportion_confint(errors, trials, alpha=alpha, method="wilson")
    return float(lo), float(hi)


def _point(p_db: float, trials: int, errors: int) -> BlerPoint:
    lo, hi = wilson_interval(errors, trials)
    return BlerPoint(float(p_db), int(trials), int(errors), errors / trials, lo, hi)


@functools.lru_cache(maxsize=32)
def _codebook(spec):
    return build_codebook(spec)


def _chunk_errors(spec, decoder, powers, seed, start, count, failed, informed) -> np.ndarray:
    """Error flags for trials ``start .. start+count-1`` at one power point."""
    book = _codebook(spec)
    R = spec.R
    mask = np.zeros(R, dtype=bool)
    mask[list(failed)] = True
    ch = sample_channel(R, CounterRNG(seed, CHANNEL_STREAM), mask, start, count)
    k = CounterRNG(seed, SYMBOL_STREAM).integers(start, count, book.L)
    rx = transmit(book, k, powers, ch)
    g_dec = ch.g * ch.alive if informed else ch.g
    khat = decode(decoder, rx.y, book, g_dec, powers)
    return khat != k


def _run_point(cfg: ExperimentConfig, p_db: float, pool) -> BlerPoint:
    powers = cfg.power(p_db)
    failed = tuple(sorted(cfg.failed))
    flags = []
    done = 0
    errors = 0
    wave = cfg.workers
    while done < cfg.max_trials and (cfg.target_errors is None or errors < cfg.target_errors):
        jobs = []
        for _ in range(wave):
            if done >= cfg.max_trials:
                break
            count = min(cfg.chunk, cfg.max_trials - done)
            jobs.append((cfg.spec, cfg.decoder, powers, cfg.seed, done, count, failed, cfg.informed))
            done += count
        if pool is None:
            results = [_chunk_errors(*job) for job in jobs]
        else:
            results = list(pool.map(_chunk_errors, *zip(*jobs)))
        for r in results:
            flags.append(r)
            errors += int(r.sum())
    flags = np.concatenate(flags) if flags else np.zeros(0, dtype=bool)
    trials = flags.size
    if cfg.target_errors is not None and errors >= cfg.target_errors:
        # stop exactly at the trial that produced the target-th error
        trials = int(np.nonzero(flags)[0][cfg.target_errors - 1]) + 1
        errors = cfg.target_errors
    return _point(p_db, trials, errors)


def run_bler(cfg: ExperimentConfig) -> list:
    """Simulate every power point of ``cfg`` and return one BlerPoint each."""
    cfg.validate()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            points = [_run_point(cfg, p, pool) for p in cfg.powers_db]
    else:
        points = [_run_point(cfg, p, None) for p in cfg.powers_db]
    if cfg.output:
        emit_csv(points, cfg.output)
    return points


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def format_csv(points: Sequence[BlerPoint]) -> str:
    lines = [",".join(CSV_COLUMNS)] + [",".join(_fmt(x) for x in p.row()) for p in points]
    return "\n".join(lines) + "\n"


def emit_csv(points: Sequence[BlerPoint], path) -> None:
    """Write ``P_dB,trials,errors,bler,ci_low,ci_high`` with LF line endings."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(points))
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            BlerPoint(float(r["P_dB"]), int(r["trials"]), int(r["errors"]),
                      float(r["bler"]), float(r["ci_low"]), float(r["ci_high"]))
            for r in reader
        ]


@dataclass
class GapReport:
    target_bler: float
    power_a_db: float
    power_b_db: float
    points_a: list = field(repr=False)
    points_b: list = field(repr=False)

    @property
    def gap_db(self) -> float:
        """How much more power code B needs than code A."""
        return self.power_b_db - self.power_a_db


def power_at_bler(points: Sequence[BlerPoint], target: float) -> float:
    """Power (dB) where the curve crosses ``target``, interpolating log10(BLER) linearly."""
    for prev, cur in zip(points, points[1:]):
        if prev.bler > target >= cur.bler:
            if cur.errors == 0:
                raise SweepError(f"no errors observed at {cur.P_dB} dB; raise trials to interpolate")
            y0, y1 = math.log10(prev.bler), math.log10(cur.bler)
            if y0 == y1:
                return cur.P_dB
            frac = (math.log10(target) - y0) / (y1 - y0)
            return prev.P_dB + frac * (cur.P_dB - prev.P_dB)
    raise SweepError(f"BLER target {target:g} not bracketed by the sweep; extend sweep")


def compare_codes(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig, target_bler: float = 1e-2) -> GapReport:
    """Run both sweeps and report the dB gap at ``target_bler``."""
    if (cfg_a.spec.R, cfg_a.spec.L) != (cfg_b.spec.R, cfg_b.spec.L):
        raise ConfigurationError("compared codes must share R and L")
    if list(cfg_a.powers_db) != list(cfg_b.powers_db):
        raise ConfigurationError("compared codes must share the power sweep")
    pa = run_bler(cfg_a)
    pb = run_bler(cfg_b)
    return GapReport(target_bler, power_at_bler(pa, target_bler), power_at_bler(pb, target_bler), pa, pb)


@dataclass
class FailureReport:
    failed: tuple
    intact: list
    degraded: list


def relay_failure_experiment(cfg: ExperimentConfig, d: int) -> FailureReport:
    """Intact curve and the curve with the last ``d`` relays silent."""
    R = cfg.spec.R
    if not 0 <= d < R:
        raise ConfigurationError(f"failed count must be in 0..{R - 1}, got {d}")
    failed = tuple(range(R - d, R))
    intact = run_bler(replace(cfg, failed=(), output=None))
    degraded = intact if d == 0 else run_bler(replace(cfg, failed=failed, output=None))
    return FailureReport(failed, intact, degraded)


def tail_slope(points: Sequence[BlerPoint], n_tail: int = 3) -> float:
    """Least-squares slope of log10(BLER) against log10(P) over the last points with errors."""
    pts = [p for p in points if p.errors > 0][-n_tail:]
    if len(pts) < 2:
        raise SweepError("need at least two points with errors to estimate a slope")
    x = np.array([p.P_dB / 10.0 for p in pts])
    y = np.log10([p.bler for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def covariance_test(R: int, P: float, n_samples: int, seed: int, g=None, relay_mats=None) -> dict:
    """Compare the empirical destination-noise covariance with ``gamma I``.

    ``g`` defaults to a draw from the experiment's channel stream.
    """
    powers = PowerConfig.split(P, R)
    if g is None:
        g = sample_channel(R, CounterRNG(seed, CHANNEL_STREAM)).g
    gamma = float(powers.gamma(g))
    mean_norm, cov = effective_noise_stats(powers, g, n_samples, CounterRNG(seed, NOISE_STREAM), relay_mats)
    diag = np.real(np.diag(cov))
    off = cov - np.diag(np.diag(cov))
    return {
        "gamma": gamma,
        "mean_norm": mean_norm,
        "max_diag_rel_dev": float(np.max(np.abs(diag - gamma)) / gamma),
        "max_offdiag_rel": float(np.max(np.abs(off)) / gamma),
        "cov": cov,
    }
