"""``kppfront`` command-line entry point."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .. import diagnostics as dg
from ..kernels import SampledFunction, kernel_root
from ..problem import NONLOCAL, STEFAN, ConfigError, ProblemConfig, critical_length
from ..solver import IntegrationError, NumericsConfig, simulate, simulate_scaled, simulate_stefan
from ..steady import (
    NoPositiveSolution,
    ShootingError,
    find_balanced_h,
    solve_elliptic,
    scan_F,
    stefan_wave_speed,
    stefan_wave_speed_logistic,
)
from ..stefanlimit import convergence_study
from .config import ConfigFileError, bundled_configs, parse_config
from .svg import Series, SvgStyle, emit_svg, trajectory_series

log = logging.getLogger("kppfront")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_CONFIG_FILE = 3
EXIT_CONFIG = 4
EXIT_INTEGRATION = 5
EXIT_THRESHOLD = 6
EXIT_STEADY = 7
EXIT_ARGUMENT = 8
EXIT_IO = 9

EXIT_TABLE = (
    (EXIT_OK, "success"),
    (EXIT_INTERNAL, "unexpected internal error"),
    (EXIT_USAGE, "bad command line"),
    (EXIT_CONFIG_FILE, "run file missing, malformed, or violating a parameter invariant"),
    (EXIT_CONFIG, "configuration not usable by the chosen subcommand"),
    (EXIT_INTEGRATION, "time integration aborted (negative density or collapsed range)"),
    (EXIT_THRESHOLD, "threshold search could not bracket a regime change"),
    (EXIT_STEADY, "steady-state or wave-speed solve failed"),
    (EXIT_ARGUMENT, "invalid numerical argument (for example too few samples to fit)"),
    (EXIT_IO, "output could not be written"),
)

SWEEP_HEADER = ("knob_value", "class", "h_limit", "rho_left", "rho_right")
METRICS = ("class", "rho", "h_limit")


class UsageError(ValueError):
    pass


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the documented exit status (most specific class first)."""
    order = (
        (UsageError, EXIT_USAGE),
        (ConfigFileError, EXIT_CONFIG_FILE),
        (ConfigError, EXIT_CONFIG),
        (IntegrationError, EXIT_INTEGRATION),
        (dg.ThresholdError, EXIT_THRESHOLD),
        ((NoPositiveSolution, ShootingError), EXIT_STEADY),
        (OSError, EXIT_IO),
        (ValueError, EXIT_ARGUMENT),
    )
    for cls, code in order:
        if isinstance(exc, cls):
            return code
    return EXIT_INTERNAL


@dataclass(frozen=True)
class SweepSpec:
    knob: str
    values: tuple[float, ...]
    metric: str = "class"

    def __post_init__(self):
        if self.knob not in dg.KNOBS:
            raise UsageError(f"unknown knob {self.knob!r}; choose from {', '.join(dg.KNOBS)}")
        if len(self.values) < 2:
            raise UsageError("a sweep needs at least two values")
        if self.metric not in METRICS:
            raise UsageError(f"metric must be one of {', '.join(METRICS)}")


# ----------------------------------------------------------------- output


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _outdir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_svg(path, series, **style) -> None:
    Path(path).write_text(emit_svg(series, SvgStyle(**style)))


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def _load(args):
    return parse_config(args.config, _overrides(args.set))


def sweep_row(value: float, cfg: ProblemConfig, out: dg.Outcome):
    left = out.rho_left if cfg.two_sided else None
    return (value, out.cls, out.h_limit, left, out.rho_right)


def _probe(task):
    value, cfg, num = task
    traj = simulate(cfg, num)
    return value, dg.classify(traj, cfg, num)


def _print_outcome(out: dg.Outcome, two_sided: bool) -> None:
    msg = f"class={out.cls} umax={out.umax:.6g}"
    if out.h_limit is not None:
        msg += f" h_limit={out.h_limit:.6g}"
    if out.speeds is not None:
        msg += f" rho_right={out.rho_right:.6g}"
        if two_sided:
            msg += f" rho_left={out.rho_left:.6g}"
    print(msg)


# ------------------------------------------------------------ subcommands


def _finish_traj(args, traj, cfg, num, stem):
    out = _outdir(args.out)
    traj.write_csv(out / f"{stem}.csv")
    for t in sorted(traj.snapshots):
        traj.write_snapshot(t, out / f"{stem}_snapshot_t{t:g}.csv")
    if args.svg:
        _write_svg(out / f"{stem}.svg", trajectory_series(traj, cfg.two_sided),
                   title=stem, xlabel="t", ylabel="boundary position")
    print(f"wrote {out / (stem + '.csv')} ({len(traj)} samples)")


def _with_snapshots(num, args):
    if getattr(args, "snapshots", None):
        return replace(num, snapshot_times=_float_list(args.snapshots))
    return num


def cmd_simulate(args):
    cfg, num = _load(args)
    if cfg.boundary_rule != NONLOCAL:
        raise ConfigError("simulate needs rule = nonlocal (use the stefan subcommand)")
    if cfg.two_sided:
        raise ConfigError("two_sided = true: use the simulate2 subcommand")
    num = _with_snapshots(num, args)
    traj = simulate(cfg, num)
    _finish_traj(args, traj, cfg, num, "trajectory")
    _print_outcome(dg.classify(traj, cfg, num), False)


def cmd_simulate2(args):
    cfg, num = _load(args)
    if not cfg.two_sided or cfg.boundary_rule != NONLOCAL:
        raise ConfigError("simulate2 needs two_sided = true and rule = nonlocal")
    num = _with_snapshots(num, args)
    traj = simulate(cfg, num)
    _finish_traj(args, traj, cfg, num, "trajectory")
    _print_outcome(dg.classify(traj, cfg, num), True)


def cmd_stefan(args):
    cfg, num = _load(args)
    if cfg.boundary_rule != STEFAN:
        raise ConfigError("the stefan subcommand needs rule = stefan")
    num = _with_snapshots(num, args)
    traj = simulate_stefan(cfg, num)
    _finish_traj(args, traj, cfg, num, "trajectory")
    fit = dg.fit_speed(traj, "right")
    print(f"fitted front speed {fit.slope:.10g}")


def cmd_scaled(args):
    cfg, num = _load(args)
    traj = simulate_scaled(cfg, num)
    _finish_traj(args, traj, cfg, num, "trajectory_scaled")
    _print_outcome(dg.classify(traj, cfg, num), False)


def cmd_sweep(args):
    base, num = _load(args)
    spec = SweepSpec(args.knob, _float_list(args.values), args.metric)
    tasks = [(v, base.with_knob(spec.knob, v), num) for v in spec.values]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            results = dict(ex.map(_probe, tasks))
    else:
        results = dict(map(_probe, tasks))
    rows = [sweep_row(v, cfg, results[v]) for v, cfg, _ in tasks]
    out = _outdir(args.out)
    write_rows(out / "sweep.csv", SWEEP_HEADER, rows)
    for row in rows:
        print(",".join(_cell(v) for v in row))
    if args.svg:
        _sweep_svg(out / "sweep.svg", spec, rows)


def _sweep_svg(path, spec: SweepSpec, rows):
    x = np.array([r[0] for r in rows])
    if spec.metric == "class":
        y = np.array([float(dg.CLASSES.index(r[1])) for r in rows])
        label = "class index (" + ", ".join(f"{i}={c}" for i, c in enumerate(dg.CLASSES)) + ")"
    elif spec.metric == "h_limit":
        y = np.array([np.nan if r[2] is None else r[2] for r in rows])
        label = "h limit"
    else:
        y = np.array([np.nan if r[4] is None else r[4] for r in rows])
        label = "rho"
    keep = np.isfinite(y)
    order = np.argsort(x[keep], kind="stable")
    _write_svg(path, [Series(spec.metric, x[keep][order], y[keep][order])],
               title=f"{spec.metric} vs {spec.knob}", xlabel=spec.knob, ylabel=label)


def cmd_threshold(args):
    base, num = _load(args)
    between = tuple(args.between.split(",")) if args.between else None
    if between is not None and (len(between) != 2 or any(c not in dg.CLASSES for c in between)):
        raise UsageError(f"--between expects two of {', '.join(dg.CLASSES)}")
    value = dg.find_threshold(base, num, args.knob, args.lo, args.hi, between, tol=args.tol)
    print(f"{args.knob} threshold {value!r}")


def cmd_steady(args):
    cfg, _ = _load(args)
    if cfg.boundary_rule != NONLOCAL or cfg.two_sided:
        raise ConfigError("steady needs a one-sided nonlocal configuration")
    r, a = cfg.reaction.r, cfg.reaction.a
    if not r > 0:
        raise NoPositiveSolution("no positive steady state without growth (r = 0)")
    # -D u'' = r u (a - u) is the unit-rate problem with diffusion D / r
    Deff = cfg.D / r
    kp = cfg.kernel_right
    hc = critical_length(Deff, a)
    c = kernel_root(kp)
    lo = args.lo if args.lo is not None else max(c, hc) * 1.01
    hi = args.hi if args.hi is not None else 5 * c
    if not hi > lo:
        raise UsageError(f"empty scan range [{lo}, {hi}]")
    hs = np.linspace(lo, hi, args.points)
    F = scan_F(hs, Deff, a, cfg.mu, kp, args.dx)
    out = _outdir(args.out)
    write_rows(out / "steady.csv", ("h", "F"), zip(hs, F))
    if args.svg:
        _write_svg(out / "steady.svg", [Series("F", hs, F)], title="balance functional",
                   xlabel="h", ylabel="F(h)")
    change = np.nonzero(np.sign(F[:-1]) * np.sign(F[1:]) < 0)[0]
    if change.size == 0:
        print("no sign change of F on the scanned range")
        return
    k = int(change[0])
    root = find_balanced_h(Deff, a, cfg.mu, kp, float(hs[k]), float(hs[k + 1]), args.dx)
    u0 = solve_elliptic(Deff, a, root, args.dx).u_at_0
    print(f"balanced range h* = {root!r} (u(0) = {u0:.10g}, kernel root {c:.10g})")


def cmd_speed(args):
    if args.a is None:
        k = stefan_wave_speed(args.r, args.D, args.mu)
    else:
        k = stefan_wave_speed_logistic(args.r, args.a, args.D, args.mu)
    print(repr(k))


def _test_profile(name: str, h: float, m: int):
    x = np.linspace(0.0, h, m + 1)
    if name == "linear":
        return SampledFunction.on_interval(0.0, h, x), (lambda z: 1.0)
    if name == "constant":
        return SampledFunction.on_interval(0.0, h, np.ones_like(x)), (lambda z: 0.0)
    if name == "cosine":
        k = math.pi / (2 * h)
        # quarter cosine: f(0) = 1, f(h) = 0, f'(h) = -k
        return (SampledFunction.on_interval(0.0, h, np.cos(k * x)),
                (lambda z: -k * math.sin(k * z)))
    raise UsageError(f"unknown profile {name!r}")


def cmd_limit_check(args):
    f, fprime = _test_profile(args.profile, args.h, args.cells)
    ns = [int(v) for v in _float_list(args.ns)]
    rows = convergence_study(f, args.h, ns, fprime=fprime, sign=args.sign)
    out = _outdir(args.out)
    write_rows(out / "limit.csv", ("n", "value", "target", "abs_error"),
               [(r.n, r.value, r.target, r.abs_error) for r in rows])
    for r in rows:
        print(f"n={r.n} value={r.value:.10g} target={r.target:.10g} error={r.abs_error:.3e}")


# ----------------------------------------------------------------- parser


def _epilog() -> str:
    lines = ["exit codes:"]
    lines += [f"  {code:<3d} {text}" for code, text in EXIT_TABLE]
    lines.append("")
    lines.append("bundled run files: " + (", ".join(bundled_configs()) or "none"))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(
        prog="kppfront", formatter_class=fmt, epilog=_epilog(),
        description="Fisher-KPP free boundary simulations with a nonlocal boundary law.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def with_config(name, help_, func, svg=True, snaps=False):
        s = sub.add_parser(name, help=help_, formatter_class=fmt, epilog=_epilog())
        s.add_argument("--config", required=True,
                       help="run file (path, or the name of a bundled file)")
        s.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a run-file entry (repeatable)")
        s.add_argument("--out", default=".", help="output directory (created if missing)")
        if svg:
            s.add_argument("--svg", action="store_true", help="also write an SVG plot")
        if snaps:
            s.add_argument("--snapshots", metavar="T1,T2,...",
                           help="times at which to store full profiles")
        s.set_defaults(func=func)
        return s

    with_config("simulate", "one-sided nonlocal run", cmd_simulate, snaps=True)
    with_config("simulate2", "two-sided nonlocal run", cmd_simulate2, snaps=True)
    with_config("stefan", "classical Stefan-condition run", cmd_stefan, snaps=True)
    with_config("scaled", "fixed-grid run in the stretched frame", cmd_scaled)

    s = with_config("sweep", "classify runs over a list of parameter values", cmd_sweep)
    s.add_argument("--knob", required=True, help="parameter to vary")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--metric", default="class", choices=METRICS, help="quantity for the plot")
    s.add_argument("--workers", type=int, default=1, help="parallel simulations")

    s = with_config("threshold", "bisect a parameter between two regimes", cmd_threshold,
                    svg=False)
    s.add_argument("--knob", required=True)
    s.add_argument("--lo", type=float, required=True)
    s.add_argument("--hi", type=float, required=True)
    s.add_argument("--between", help="expected classes at lo,hi (default: read from the probes)")
    s.add_argument("--tol", type=float, default=None, help="bracket width to stop at")

    s = with_config("steady", "scan the balance functional F(h) and locate its root",
                    cmd_steady)
    s.add_argument("--lo", type=float, default=None)
    s.add_argument("--hi", type=float, default=None)
    s.add_argument("--points", type=int, default=40)
    s.add_argument("--dx", type=float, default=1e-3, help="shooting step")

    s = sub.add_parser("speed", help="Stefan semi-wave speed", formatter_class=fmt,
                       epilog=_epilog())
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--D", type=float, default=1.0)
    s.add_argument("--mu", type=float, default=1.0)
    s.add_argument("--a", type=float, default=None,
                   help="carrying capacity for growth r u (a - u); default uses r U (1 - U)")
    s.set_defaults(func=cmd_speed)

    s = sub.add_parser("limit-check", help="delta-kernel limit of the boundary functional",
                       formatter_class=fmt, epilog=_epilog())
    s.add_argument("--profile", default="linear", choices=("linear", "cosine", "constant"))
    s.add_argument("--h", type=float, default=1.0)
    s.add_argument("--cells", type=int, default=20000, help="samples of the test profile")
    s.add_argument("--ns", default="10,100,1000")
    s.add_argument("--sign", type=float, default=-1.0, help="target is sign * f'(h)")
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_limit_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # every failure becomes a documented exit status
        code = exit_code_for(exc)
        print(f"kppfront {args.command}: error: {exc}", file=sys.stderr)
        if code == EXIT_INTERNAL:
            log.exception("unexpected failure")
        return code
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
