"""Flat ``key = value`` files for code specs and experiment settings.

Example::

    # v = [11, 7, 3, 1] with equal tail exponents
    R = 4
    L = 16
    u = 11,7,3,1,0,0,0,0
    gbh_kind = real_hadamard
    powers = 0:30:5
    seed = 7

Blank lines and ``#`` comments are ignored. Keys are case sensitive.
"""

from __future__ import annotations

import math
from pathlib import Path

from .code_construction import CyclicCodeSpec
from .errors import ConfigurationError

__all__ = ["parse_kv", "read_kv", "spec_from_kv", "spec_to_kv", "load_spec", "dump_spec", "parse_int_list", "parse_powers"]

SPEC_KEYS = ("R", "L", "u", "gbh_kind")


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def read_kv(path) -> dict:
    try:
        return parse_kv(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc


def parse_int_list(text: str) -> list:
    text = text.strip().strip("[]")
    if not text:
        return []
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise ConfigurationError(f"bad integer list {text!r}") from exc


def parse_powers(text: str) -> list:
    """``"10,20,30"`` or inclusive ``"start:stop:step"`` (dB). ``-inf`` allowed."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ConfigurationError("power step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad power sweep {text!r}") from exc


def spec_from_kv(kv: dict) -> CyclicCodeSpec:
    missing = [k for k in ("R", "L", "u") if k not in kv]
    if missing:
        raise ConfigurationError(f"spec is missing keys: {', '.join(missing)}")
    try:
        R, L = int(kv["R"]), int(kv["L"])
    except ValueError as exc:
        raise ConfigurationError(f"R and L must be integers: {exc}") from exc
    return CyclicCodeSpec(R, L, tuple(parse_int_list(kv["u"])), kv.get("gbh_kind") or None)


def spec_to_kv(spec: CyclicCodeSpec) -> str:
    return (
        f"R = {spec.R}\n"
        f"L = {spec.L}\n"
        f"u = {','.join(str(x) for x in spec.u)}\n"
        f"gbh_kind = {spec.gbh_kind}\n"
    )


def load_spec(path) -> CyclicCodeSpec:
    return spec_from_kv(read_kv(path))


def dump_spec(spec: CyclicCodeSpec, path) -> None:
    Path(path).write_text(spec_to_kv(spec), encoding="utf-8", newline="\n")
