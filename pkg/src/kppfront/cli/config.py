"""Flat ``key = value`` run files.

One assignment per line, ``#`` starts a comment.  Recognised keys::

    D mu r a                    model coefficients
    c1 c2 alpha1 alpha2         kernel (the left kernel when two_sided = true)
    c3 c4 alpha3 alpha4         right kernel, two-sided runs only
    h0 two_sided rule u0        geometry, boundary law, initial data
    dx dt t_end sample_every    numerics

``u0`` is either ``poly:<beta>`` for ``beta (h0^2 - x^2)`` or ``file:<path>``
naming an ``x,u`` CSV (relative paths resolve against the run file).
"""
from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from ..kernels import KernelParams, SampledFunction
from ..problem import (
    NONLOCAL,
    STEFAN,
    Polynomial,
    ProblemConfig,
    ReactionSpec,
    Tabulated,
    validate,
)
from ..solver import NumericsConfig

BUNDLED = Path(__file__).resolve().parent.parent / "configs"

FLOAT_KEYS = ("D", "mu", "r", "a", "c1", "c2", "alpha1", "alpha2", "c3", "c4", "alpha3",
              "alpha4", "h0", "dx", "dt", "t_end")
KEYS = FLOAT_KEYS + ("two_sided", "rule", "u0", "sample_every")
FIRST_KERNEL = ("c1", "c2", "alpha1", "alpha2")
SECOND_KERNEL = ("c3", "c4", "alpha3", "alpha4")

DEFAULTS = {
    "D": 1.0, "mu": 1.0, "r": 1.0, "a": 5.0, "h0": 3.0, "two_sided": False,
    "rule": NONLOCAL, "u0": Polynomial(0.01),
    "dx": 0.01, "dt": 1e-3, "t_end": 200.0, "sample_every": 100,
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


class ConfigFileError(ValueError):
    """Malformed run file; ``key`` names the offending entry when there is one."""

    def __init__(self, msg: str, key: str | None = None, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}: {msg}{where}" if key else msg + where)
        self.key = key
        self.line = line


def resolve_config_path(path) -> Path:
    """An existing path, or the bundled run file of that name."""
    p = Path(path)
    if p.is_file():
        return p
    bundled = BUNDLED / p.name
    if not p.parent.parts and bundled.is_file():
        return bundled
    raise ConfigFileError(f"config file not found: {path}")


def bundled_configs() -> list[str]:
    return sorted(f.name for f in BUNDLED.glob("*.cfg"))


def read_profile(path) -> SampledFunction:
    """Load an ``x,u`` CSV on a uniform grid (comment lines start with ``#``)."""
    xs, us = [], []
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if line.strip() and not line.startswith("#"))
        for row in rows:
            if row == ["x", "u"]:
                continue
            try:
                xs.append(float(row[0]))
                us.append(float(row[1]))
            except (ValueError, IndexError):
                raise ConfigFileError(f"bad row {row!r} in profile file {path}", "u0")
    x = np.asarray(xs)
    if x.size < 2:
        raise ConfigFileError(f"profile file {path} needs at least two samples", "u0")
    dx = np.diff(x)
    if np.any(dx <= 0) or np.ptp(dx) > 1e-9 * max(1.0, x[-1] - x[0]):
        raise ConfigFileError(f"profile file {path} must use uniformly increasing x", "u0")
    return SampledFunction.on_interval(x[0], x[-1], us)


def _parse_value(key: str, raw: str, line: int, base: Path):
    if key in FLOAT_KEYS:
        try:
            return float(raw)
        except ValueError:
            raise ConfigFileError(f"expected a number, got {raw!r}", key, line) from None
    if key == "sample_every":
        try:
            return int(raw)
        except ValueError:
            raise ConfigFileError(f"expected an integer, got {raw!r}", key, line) from None
    if key == "two_sided":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigFileError(f"expected true or false, got {raw!r}", key, line)
    if key == "rule":
        if raw not in (NONLOCAL, STEFAN):
            raise ConfigFileError(f"expected {NONLOCAL} or {STEFAN}, got {raw!r}", key, line)
        return raw
    # u0
    kind, sep, arg = raw.partition(":")
    if not sep:
        raise ConfigFileError(f"expected poly:<beta> or file:<path>, got {raw!r}", key, line)
    if kind == "poly":
        try:
            return Polynomial(float(arg))
        except ValueError:
            raise ConfigFileError(f"bad beta {arg!r}", key, line) from None
    if kind == "file":
        p = Path(arg)
        if not p.is_absolute():
            p = base / p
        p = p.resolve()
        if not p.is_file():
            raise ConfigFileError(f"profile file not found: {arg}", key, line)
        return Tabulated(read_profile(p), str(p))
    raise ConfigFileError(f"unknown initial-data kind {kind!r}", key, line)


def parse_text(text: str, base: Path | str = ".") -> dict:
    """Raw key/value mapping with types applied; defaults are not filled in."""
    base = Path(base)
    out = {}
    for num, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigFileError(f"expected 'key = value', got {line.strip()!r}", line=num)
        if key not in KEYS:
            raise ConfigFileError("unknown key", key, num)
        if key in out:
            raise ConfigFileError("given twice", key, num)
        if not raw:
            raise ConfigFileError("missing value", key, num)
        out[key] = _parse_value(key, raw, num, base)
    return out


def _kernel(values: dict, names) -> KernelParams | None:
    present = [k for k in names if k in values]
    if not present:
        return None
    missing = [k for k in names if k not in values]
    if missing:
        raise ConfigFileError("missing required key (kernels need all four coefficients)",
                              missing[0])
    return KernelParams(*(values[k] for k in names))


def build(values: dict) -> tuple[ProblemConfig, NumericsConfig]:
    """Assemble and validate configurations from a parsed mapping."""
    v = {**DEFAULTS, **values}
    two = v["two_sided"]
    first = _kernel(v, FIRST_KERNEL)
    second = _kernel(v, SECOND_KERNEL)
    if v["rule"] == NONLOCAL:
        if first is None:
            raise ConfigFileError("missing required key for the nonlocal rule", "c1")
        if two and second is None:
            raise ConfigFileError("missing required key for a two-sided run", "c3")
    if second is not None and not two:
        raise ConfigFileError("only valid with two_sided = true", "c3")
    if two:
        kernel_left, kernel_right = first, second
    else:
        kernel_left, kernel_right = None, first
    cfg = ProblemConfig(
        D=v["D"], mu=v["mu"], reaction=ReactionSpec(v["r"], v["a"]),
        kernel_right=kernel_right, kernel_left=kernel_left, h0=v["h0"],
        g0=-v["h0"] if two else None, boundary_rule=v["rule"], initial=v["u0"])
    num = NumericsConfig(dx=v["dx"], dt=v["dt"], t_end=v["t_end"],
                         sample_every=v["sample_every"])
    bad = validate(cfg) + num.violations()
    if bad:
        raise ConfigFileError("; ".join(bad))
    return cfg, num


def parse_config(path, overrides: dict | None = None) -> tuple[ProblemConfig, NumericsConfig]:
    """Read a run file.  ``overrides`` maps keys to raw strings applied on top."""
    p = resolve_config_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigFileError(f"cannot read {p}: {exc}") from exc
    values = parse_text(text, p.parent)
    for key, raw in (overrides or {}).items():
        if key not in KEYS:
            raise ConfigFileError("unknown key", key)
        values[key] = _parse_value(key, str(raw), None, Path.cwd())
    return build(values)


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_config(config: ProblemConfig, num: NumericsConfig) -> str:
    """Run-file text that ``parse_config`` turns back into equal objects."""
    lines = []
    put = lambda k, val: lines.append(f"{k} = {val}")  # noqa: E731
    put("D", _fmt(config.D))
    put("mu", _fmt(config.mu))
    put("r", _fmt(config.reaction.r))
    put("a", _fmt(config.reaction.a))
    put("rule", config.boundary_rule)
    put("two_sided", "true" if config.two_sided else "false")
    if config.two_sided and config.g0 != -config.h0:
        raise ValueError("run files describe two-sided ranges centred at 0 only")
    kernels = []
    if config.two_sided:
        kernels = [(FIRST_KERNEL, config.kernel_left), (SECOND_KERNEL, config.kernel_right)]
    elif config.kernel_right is not None:
        kernels = [(FIRST_KERNEL, config.kernel_right)]
    for names, kp in kernels:
        for k, val in zip(names, (kp.c1, kp.c2, kp.alpha1, kp.alpha2)):
            put(k, _fmt(val))
    put("h0", _fmt(config.h0))
    ic = config.initial
    if isinstance(ic, Polynomial):
        put("u0", f"poly:{_fmt(ic.beta)}")
    else:
        if ic.path is None:
            raise ValueError("tabulated initial data without a source file cannot be dumped")
        put("u0", f"file:{os.fspath(ic.path)}")
    put("dx", _fmt(num.dx))
    put("dt", _fmt(num.dt))
    put("t_end", _fmt(num.t_end))
    put("sample_every", str(int(num.sample_every)))
    return "\n".join(lines) + "\n"
