"""Long-time classification, spreading-speed fits and threshold bisection."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .problem import ProblemConfig, critical_length
from .solver import NumericsConfig, Trajectory, simulate

log = logging.getLogger(__name__)

VANISHING = "Vanishing"
BALANCING = "Balancing"
SPREADING = "Spreading"
UNDETERMINED = "Undetermined"
CLASSES = (VANISHING, BALANCING, SPREADING, UNDETERMINED)

# Classification tolerances, relative to the carrying capacity a where noted.
VANISH_UMAX = 1e-3
STILL_SLOPE = 1e-3
SPREAD_SLOPE = 0.01
SPREAD_UMAX = 0.05
BALANCE_UMAX = 0.10

KNOBS = ("c1", "c2", "alpha1", "alpha2", "c3", "c4", "alpha3", "alpha4", "h0", "beta",
         "r", "a", "D", "mu")


@dataclass(frozen=True)
class SpeedFit:
    slope: float
    intercept: float
    residual: float


@dataclass(frozen=True)
class Outcome:
    cls: str
    h_limit: Optional[float] = None
    speeds: Optional[tuple[float, float]] = None
    umax: float = float("nan")

    @property
    def rho_left(self):
        return None if self.speeds is None else self.speeds[0]

    @property
    def rho_right(self):
        return None if self.speeds is None else self.speeds[1]


class ThresholdError(ValueError):
    def __init__(self, msg, lo_outcome=None, hi_outcome=None):
        super().__init__(msg)
        self.lo_outcome = lo_outcome
        self.hi_outcome = hi_outcome


def fit_speed(traj: Trajectory, side: str = "right", tail_fraction: float = 0.25) -> SpeedFit:
    """Least-squares line through the last ``tail_fraction`` of boundary samples."""
    if not 0 < tail_fraction <= 0.5:
        raise ValueError("tail_fraction must lie in (0, 0.5]")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    n = len(traj)
    k = int(np.floor(n * tail_fraction))
    if k < 10:
        raise ValueError(f"need at least 10 tail samples, have {k} of {n}")
    t = traj.t[-k:]
    y = traj.boundary(side)[-k:]
    A = np.column_stack([t, np.ones_like(t)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((y - (slope * t + icpt)) ** 2)))
    return SpeedFit(float(slope), float(icpt), res)


def classify(traj: Trajectory, config: ProblemConfig, num: NumericsConfig | None = None,
             tail_fraction: float = 0.25) -> Outcome:
    """Long-time regime of a finished run.

    Left-boundary speeds are reported as raw slopes of g(t) (negative when
    moving left); outward motion is what counts toward spreading.
    """
    a = config.reaction.a
    umax = float(traj.umax[-1])
    right = fit_speed(traj, "right", tail_fraction).slope
    if config.two_sided:
        left = fit_speed(traj, "left", tail_fraction).slope
        outward = (-left, right)
        half = 0.5 * float(traj.width[-1])
    else:
        left = 0.0
        outward = (right,)
        half = float(traj.h[-1])
    h_end = float(traj.h[-1])
    still = all(abs(s) < STILL_SLOPE for s in outward)

    if half <= critical_length(config.D, config.reaction.linear_rate):
        return Outcome(VANISHING, h_limit=h_end, umax=umax)
    if umax < VANISH_UMAX * a and still:
        return Outcome(VANISHING, h_limit=h_end, umax=umax)
    if max(outward) >= SPREAD_SLOPE and abs(umax - a) <= SPREAD_UMAX * a:
        return Outcome(SPREADING, speeds=(left, right), umax=umax)
    if still and umax >= BALANCE_UMAX * a:
        return Outcome(BALANCING, h_limit=h_end, umax=umax)
    return Outcome(UNDETERMINED, umax=umax)


Runner = Callable[[ProblemConfig, NumericsConfig], Trajectory]


def run_and_classify(config: ProblemConfig, num: NumericsConfig,
                     runner: Runner = simulate) -> tuple[Trajectory, Outcome]:
    traj = runner(config, num)
    return traj, classify(traj, config, num)


def find_threshold(base: ProblemConfig, num: NumericsConfig, knob: str, lo: float, hi: float,
                   boundary_between: tuple[str, str] | None = None, tol: float | None = None,
                   max_extensions: int = 2, runner: Runner = simulate) -> float:
    """Bisect ``knob`` between two regimes until the bracket is narrower than ``tol``.

    ``tol`` defaults to 0.01 (0.002 for h0).  An Undetermined probe is re-run
    with a doubled horizon, at most ``max_extensions`` times.  Without
    ``boundary_between`` the pair is read off the two endpoint probes.
    ``runner`` performs each simulation (for instance a caching wrapper).
    """
    if knob not in KNOBS:
        raise ValueError(f"unknown knob {knob!r}")
    if tol is None:
        tol = 0.002 if knob == "h0" else 0.01

    def probe(value):
        cfg = base.with_knob(knob, value)
        n = num
        for _ in range(max_extensions + 1):
            out = run_and_classify(cfg, n, runner)[1]
            if out.cls != UNDETERMINED:
                return out
            n = replace(n, t_end=2 * n.t_end)
        return out

    out_lo, out_hi = probe(lo), probe(hi)
    if boundary_between is None:
        if UNDETERMINED in (out_lo.cls, out_hi.cls) or out_lo.cls == out_hi.cls:
            raise ThresholdError(
                f"{knob}: endpoints give {out_lo.cls} at {lo} and {out_hi.cls} at {hi}; "
                "no regime change to bisect", out_lo, out_hi)
        boundary_between = (out_lo.cls, out_hi.cls)
    cls_lo, cls_hi = boundary_between
    if out_lo.cls != cls_lo or out_hi.cls != cls_hi:
        raise ThresholdError(
            f"{knob}: expected {cls_lo} at {lo} and {cls_hi} at {hi}, "
            f"got {out_lo.cls} and {out_hi.cls}", out_lo, out_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        out = probe(mid)
        log.info("threshold %s=%.6g -> %s", knob, mid, out.cls)
        if out.cls == cls_lo:
            lo = mid
        elif out.cls == cls_hi:
            hi = mid
        else:
            raise ThresholdError(f"{knob}={mid}: probe gave {out.cls}, outside the bracketed pair",
                                 out_lo, out_hi)
    return 0.5 * (lo + hi)
