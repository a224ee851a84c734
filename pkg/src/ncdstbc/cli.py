"""Command-line entry point: ``ncdstbc <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical or contract
violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .code_construction import (
    CONSTRAINTS,
    CyclicCodeSpec,
    build_codebook,
    coding_gain,
    is_fully_diverse_bruteforce,
    is_fully_diverse_gcd,
    search_best_v,
)
from .config_io import dump_spec, parse_int_list, parse_powers, read_kv, spec_from_kv
from .decoders import DECODERS
from .errors import ConfigurationError, ConstructionError, ContractViolation, SingularMatrixError
from .harness import (
    ExperimentConfig,
    compare_codes,
    covariance_test,
    emit_csv,
    format_csv,
    relay_failure_experiment,
    run_bler,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------
def _add_spec_args(p: argparse.ArgumentParser, prefix: str = "") -> None:
    dash = "--" + prefix.replace("_", "-")
    p.add_argument(f"{dash}spec", dest=f"{prefix}spec", help="key=value spec/config file")
    p.add_argument(f"{dash}R", dest=f"{prefix}R", type=int)
    p.add_argument(f"{dash}L", dest=f"{prefix}L", type=int)
    p.add_argument(f"{dash}u", dest=f"{prefix}u", help="2R comma-separated exponents")
    p.add_argument(f"{dash}v", dest=f"{prefix}v", help="R comma-separated differences (tail exponents 0)")
    p.add_argument(f"{dash}gbh-kind", dest=f"{prefix}gbh_kind", choices=["real_hadamard", "dft"])


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--powers", help="dB list '10,20' or inclusive range 'start:stop:step'")
    p.add_argument("--decoder", choices=DECODERS)
    p.add_argument("--max-trials", type=int)
    p.add_argument("--target-errors", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--failed", help="comma-separated silent relay indices (0-based)")
    p.add_argument("--uninformed", action="store_true", default=None,
                   help="decoder is not told which relays are silent")
    p.add_argument("--p1-frac", type=float)
    p.add_argument("--p2-each", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")


def _resolve_spec(args, prefix: str = "") -> tuple:
    """Spec from file overlaid with flags; also returns the raw file dict."""
    get = lambda name: getattr(args, prefix + name, None)  # noqa: E731
    kv = read_kv(get("spec")) if get("spec") else {}
    for key in ("R", "L", "u", "gbh_kind"):
        if get(key) is not None:
            kv[key] = str(get(key))
    if get("v") is not None:
        v = parse_int_list(get("v"))
        if "L" not in kv:
            raise ConfigurationError("--v needs L")
        spec = CyclicCodeSpec.from_v(int(kv["L"]), v, gbh_kind=kv.get("gbh_kind") or None)
        kv.update(R=str(spec.R), u=",".join(map(str, spec.u)))
    return spec_from_kv(kv), kv


def _default(value, fallback):
    return fallback if value is None else value


def _experiment(args, spec, kv: dict) -> ExperimentConfig:
    def pick(flag, key, conv):
        val = getattr(args, flag, None)
        if val is not None:
            return val
        return conv(kv[key]) if key in kv else None

    seed = pick("seed", "seed", int)
    if seed is None:
        raise ConfigurationError("a seed is required (--seed or 'seed =' in the config file)")
    powers = pick("powers", "powers", str)
    if powers is None:
        raise ConfigurationError("a power sweep is required (--powers or 'powers =')")
    failed = pick("failed", "failed", str)
    uninformed = args.uninformed if args.uninformed is not None else kv.get("informed", "true").lower() == "false"
    cfg = ExperimentConfig(
        spec=spec,
        powers_db=parse_powers(powers),
        seed=seed,
        decoder=_default(pick("decoder", "decoder", str), "unitary"),
        max_trials=_default(pick("max_trials", "max_trials", int), 100_000),
        target_errors=pick("target_errors", "target_errors", int),
        failed=tuple(parse_int_list(failed)) if failed else (),
        informed=not uninformed,
        p1_frac=_default(pick("p1_frac", "p1_frac", float), 0.5),
        p2_each=pick("p2_each", "p2_each", float),
        workers=_default(pick("workers", "workers", int), 1),
        output=pick("output", "output", str),
    )
    cfg.validate()
    return cfg


def _table(rows, out=None) -> None:
    out = out or sys.stdout
    width = max(len(str(k)) for k, _ in rows)
    for k, v in rows:
        print(f"{str(k):<{width}}  {v}", file=out)


def _print_points(points, out=None) -> None:
    out = out or sys.stderr
    print(f"{'P_dB':>7} {'trials':>9} {'errors':>7} {'bler':>11} {'ci_low':>11} {'ci_high':>11}", file=out)
    for p in points:
        print(f"{p.P_dB:7.2f} {p.trials:9d} {p.errors:7d} {p.bler:11.4e} {p.ci_low:11.4e} {p.ci_high:11.4e}", file=out)


def _write_points(points, path) -> None:
    if path:
        emit_csv(points, path)
    else:
        sys.stdout.write(format_csv(points))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_design(args) -> int:
    spec, _ = _resolve_spec(args)
    book = build_codebook(spec)
    unit_err = float(np.max(np.abs(np.conj(np.swapaxes(book.codewords, 1, 2)) @ book.codewords - np.eye(spec.R))))
    rows = [
        ("R", spec.R), ("L", spec.L), ("T", spec.T),
        ("u", list(spec.u)), ("v", list(spec.v)),
        ("gbh_kind", spec.gbh_kind),
        ("unitary_error", f"{unit_err:.3e}"),
        ("gcd_full_diversity", is_fully_diverse_gcd(spec)),
        ("coding_gain", f"{coding_gain(spec):.10g}"),
    ]
    for j, A in enumerate(book.relay_matrices, 1):
        rows.append((f"A_{j}", np.round(np.diag(A), 12).tolist()))
    _table(rows)
    if args.out:
        dump_spec(spec, args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    spec, _ = _resolve_spec(args)
    gcd_ok = is_fully_diverse_gcd(spec)
    report = is_fully_diverse_bruteforce(build_codebook(spec), tol=args.tol, max_L=args.max_L)
    rows = [("gcd_test", gcd_ok)] + report.as_rows() + [("agree", gcd_ok == report.fully_diverse)]
    _table(rows)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write("key,value\n")
            for k, v in rows:
                fh.write(f"{k},\"{v}\"\n")
    return EXIT_OK


def cmd_gain_search(args) -> int:
    v, phi = search_best_v(args.R, args.L, args.constraint, max_L=args.max_L)
    spec = CyclicCodeSpec.from_v(args.L, v)
    _table([("R", args.R), ("L", args.L), ("constraint", args.constraint),
            ("v", list(v)), ("coding_gain", f"{phi:.10g}"), ("u", list(spec.u))])
    if args.out:
        dump_spec(spec, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec, kv = _resolve_spec(args)
    cfg = _experiment(args, spec, kv)
    out = cfg.output
    cfg.output = None
    points = run_bler(cfg)
    _print_points(points)
    _write_points(points, out)
    return EXIT_OK


def cmd_failure(args) -> int:
    spec, kv = _resolve_spec(args)
    cfg = _experiment(args, spec, kv)
    rep = relay_failure_experiment(cfg, args.count)
    print(f"intact (all {spec.R} relays)", file=sys.stderr)
    _print_points(rep.intact)
    print(f"degraded (silent relays {list(rep.failed)})", file=sys.stderr)
    _print_points(rep.degraded)
    if cfg.output:
        stem = Path(cfg.output)
        emit_csv(rep.intact, stem.with_name(stem.stem + "_intact.csv"))
        emit_csv(rep.degraded, stem.with_name(stem.stem + "_degraded.csv"))
    return EXIT_OK


def cmd_compare(args) -> int:
    spec_a, kv_a = _resolve_spec(args, "a_")
    spec_b, kv_b = _resolve_spec(args, "b_")
    cfg_a = _experiment(args, spec_a, kv_a)
    cfg_b = _experiment(args, spec_b, kv_b)
    cfg_a.output = cfg_b.output = None
    rep = compare_codes(cfg_a, cfg_b, args.target_bler)
    print("code A", file=sys.stderr)
    _print_points(rep.points_a)
    print("code B", file=sys.stderr)
    _print_points(rep.points_b)
    _table([("target_bler", args.target_bler), ("P_A_dB", f"{rep.power_a_db:.4f}"),
            ("P_B_dB", f"{rep.power_b_db:.4f}"), ("gap_dB", f"{rep.gap_db:.4f}")])
    return EXIT_OK


def cmd_cov_test(args) -> int:
    res = covariance_test(args.R, args.power, args.samples, args.seed)
    _table([("R", args.R), ("P_linear", args.power), ("samples", args.samples),
            ("gamma", f"{res['gamma']:.6g}"), ("mean_norm", f"{res['mean_norm']:.3e}"),
            ("max_diag_rel_dev", f"{res['max_diag_rel_dev']:.4f}"),
            ("max_offdiag_rel", f"{res['max_offdiag_rel']:.4f}")])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncdstbc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="build a code and report its parameters")
    _add_spec_args(p)
    p.add_argument("--out", help="write the spec to this key=value file")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("check", help="gcd and brute-force diversity checks")
    _add_spec_args(p)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-L", type=int, default=4096)
    p.add_argument("--csv", help="also write the report as CSV")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gain-search", help="exhaustive search for the best difference vector")
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--constraint", choices=CONSTRAINTS, default="none")
    p.add_argument("--max-L", type=int, default=4096)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gain_search)

    p = sub.add_parser("simulate", help="Monte Carlo BLER sweep")
    _add_spec_args(p)
    _add_sim_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("failure", help="BLER with the last --count relays silent vs intact")
    _add_spec_args(p)
    _add_sim_args(p)
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(func=cmd_failure)

    p = sub.add_parser("compare", help="dB gap between two codes at a target BLER")
    _add_spec_args(p, "a_")
    _add_spec_args(p, "b_")
    _add_sim_args(p)
    p.add_argument("--target-bler", type=float, default=1e-2)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("cov-test", help="empirical effective-noise covariance vs gamma I")
    p.add_argument("--R", type=int, default=4)
    p.add_argument("--power", type=float, default=100.0, help="total power P (linear)")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_cov_test)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ConstructionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractViolation, SingularMatrixError, FloatingPointError) as exc:
        print(f"numerical/contract violation: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
