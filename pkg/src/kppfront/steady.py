"""Steady profiles, the balance functional F(h), and the Stefan semi-wave speed.

Both boundary value problems are solved by shooting with a fixed-step RK4
integrator and bisection on the free initial datum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .kernels import KernelParams, SampledFunction, boundary_functional, kernel_root
from .problem import critical_length

__all__ = [
    "EllipticSolution", "NoPositiveSolution", "critical_length", "solve_elliptic",
    "F_of_h", "cosine_mode_functional", "find_balanced_h", "stefan_wave_speed",
    "stefan_wave_speed_logistic", "scan_F",
]

ELLIPTIC_TOL = 1e-10


class NoPositiveSolution(ValueError):
    pass


class ShootingError(RuntimeError):
    pass


@dataclass(frozen=True)
class EllipticSolution:
    h: float
    samples: SampledFunction
    u_at_0: float
    residual: float


@numba.njit(cache=True)
def _rk4_profile(y0, h, n, D, a, flip):
    """Integrate D y'' = sgn * y (a - y), y(0) = y0, y'(0) = 0 over n equal steps.

    flip=False integrates u itself (sgn = -1); flip=True integrates v = a - u
    (sgn = +1), which keeps precision when u(0) is close to a.
    """
    sgn = 1.0 if flip else -1.0
    hs = h / n
    y = np.empty(n + 1)
    y[0] = y0
    p = 0.0
    q = y0
    for i in range(n):
        k1q = p
        k1p = sgn * q * (a - q) / D
        q2 = q + 0.5 * hs * k1q
        p2 = p + 0.5 * hs * k1p
        k2q = p2
        k2p = sgn * q2 * (a - q2) / D
        q3 = q + 0.5 * hs * k2q
        p3 = p + 0.5 * hs * k2p
        k3q = p3
        k3p = sgn * q3 * (a - q3) / D
        q4 = q + hs * k3q
        p4 = p + hs * k3p
        k4q = p4
        k4p = sgn * q4 * (a - q4) / D
        q += hs * (k1q + 2 * k2q + 2 * k3q + k4q) / 6.0
        p += hs * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0
        y[i + 1] = q
    return y


def _u_from(y, a, flip):
    return a - y if flip else y


def _elliptic_residual(u, dx, D, a):
    """Max nodal defect of -D u'' - u (a - u) with fourth-order difference stencils."""
    n = u.size - 1
    ext = np.concatenate([u[2:0:-1], u])  # even mirror through x = 0
    c = ext[:-4], ext[1:-3], ext[2:-2], ext[3:-1], ext[4:]
    upp = (-c[0] + 16 * c[1] - 30 * c[2] + 16 * c[3] - c[4]) / (12 * dx * dx)
    # centred stencil covers nodes 0..n-2; node n-1 uses a one-sided six-point rule
    last = (10 * u[n] - 15 * u[n - 1] - 4 * u[n - 2] + 14 * u[n - 3] - 6 * u[n - 4]
            + u[n - 5]) / (12 * dx * dx)
    upp = np.append(upp, last)
    inner = u[:n]
    return float(np.max(np.abs(-D * upp - inner * (a - inner))))


def solve_elliptic(D: float, a: float, h: float, dx: float = 1e-3) -> EllipticSolution:
    """Positive solution of -D u'' = u (a - u) on (0, h), u'(0) = 0, u(h) = 0."""
    hc = critical_length(D, a)
    if h <= hc:
        raise NoPositiveSolution(f"h={h} is not above the critical length {hc}")
    n = max(int(math.ceil(h / dx)), 8)
    if n < 8:
        raise ValueError("too few steps")

    def run(param, flip):
        y = _rk4_profile(param, h, n, D, a, flip)
        return _u_from(y, a, flip)

    # u(0) above or below a/2 decides which variable keeps precision
    mid = run(0.5 * a, False)
    flip = bool(np.any(mid < 0))
    # bisection parameter: u(0) (flip=False) or a - u(0) (flip=True); in both
    # cases "low" hits zero before h when flip=False and stays positive when flip=True
    lo, hi = (0.0, 0.5 * a)
    best = None
    for _ in range(400):
        p = 0.5 * (lo + hi)
        u = run(p, flip)
        crosses = bool(np.any(u < 0))
        if abs(u[-1]) <= ELLIPTIC_TOL * a and np.all(u[:-1] > 0):
            best = u
            break
        if crosses != flip:
            lo = p
        else:
            hi = p
        if hi - lo <= 4 * np.finfo(float).eps * max(hi, 1e-300):
            break
    if best is None:
        u = run(0.5 * (lo + hi), flip)
        if abs(u[-1]) > ELLIPTIC_TOL * a * 100:
            raise ShootingError(f"elliptic shooting stalled at h={h}: u(h)={u[-1]:.3e}")
        best = u
    s = h / n
    # residual of the integrated profile, before pinning u(h) to exactly zero
    res = _elliptic_residual(best, s, D, a)
    u = best.copy()
    u[-1] = 0.0
    return EllipticSolution(h, SampledFunction(0.0, s, u), float(u[0]), res)


def cosine_mode_functional(h: float, mu: float, kp: KernelParams) -> float:
    """``mu * int_0^h cos(pi x / 2h) w(h - x) dx`` in closed form."""
    k = math.pi / (2 * h)
    out = 0.0
    for c, al in kp.terms:
        out += c * (k - al * math.exp(-al * h)) / (al * al + k * k)
    return mu * out


def F_of_h(h: float, D: float, a: float, mu: float, kp: KernelParams, dx: float = 1e-3) -> float:
    """Boundary velocity produced by the steady profile on (0, h)."""
    sol = solve_elliptic(D, a, h, dx)
    return boundary_functional(sol.samples, kp, "right", mu)


def scan_F(hs, D, a, mu, kp, dx=1e-3):
    return np.array([F_of_h(float(h), D, a, mu, kp, dx) for h in hs])


def find_balanced_h(D: float, a: float, mu: float, kp: KernelParams, lo: float | None = None,
                    hi: float | None = None, dx: float = 1e-3, width: float = 1e-4) -> float:
    """Zero of F by bisection; default bracket (1.01, 5) x kernel root."""
    hc = critical_length(D, a)
    c = kernel_root(kp)
    if lo is None:
        lo = max(1.01 * c, hc * (1 + 1e-6))
    if hi is None:
        hi = 5 * c
    if lo <= hc:
        raise ValueError(f"lo={lo} must exceed the critical length {hc}")
    f_lo, f_hi = F_of_h(lo, D, a, mu, kp, dx), F_of_h(hi, D, a, mu, kp, dx)
    if f_lo * f_hi >= 0:
        raise ValueError(f"no sign change: F({lo})={f_lo:.6g}, F({hi})={f_hi:.6g}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        f_mid = F_of_h(mid, D, a, mu, kp, dx)
        if f_mid * f_lo > 0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ------------------------------------------------------------- semi-wave


@numba.njit(cache=True)
def _wave_shoot(p, k, r, D, L, n):
    """Integrate D U'' = k U' - r U (1 - U), U(0)=0, U'(0)=p.

    Returns +1 if U overshoots 1, -1 if U turns back below 1, 0 if undecided at L.
    """
    hs = L / n
    q = 0.0
    v = p
    for i in range(n):
        k1q = v
        k1v = (k * v - r * q * (1 - q)) / D
        q2 = q + 0.5 * hs * k1q
        v2 = v + 0.5 * hs * k1v
        k2q = v2
        k2v = (k * v2 - r * q2 * (1 - q2)) / D
        q3 = q + 0.5 * hs * k2q
        v3 = v + 0.5 * hs * k2v
        k3q = v3
        k3v = (k * v3 - r * q3 * (1 - q3)) / D
        q4 = q + hs * k3q
        v4 = v + hs * k3v
        k4q = v4
        k4v = (k * v4 - r * q4 * (1 - q4)) / D
        q += hs * (k1q + 2 * k2q + 2 * k3q + k4q) / 6.0
        v += hs * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
        if q > 1.0:
            return 1
        if v <= 0.0:
            return -1
    return 0


def _wave_slope(k, r, D, L, n, rtol=1e-13):
    """U'(0) of the semi-wave connecting U(0)=0 to U=1 at wave speed k."""
    lo, hi = 0.0, math.sqrt(r / D)
    for _ in range(200):
        if _wave_shoot(hi, k, r, D, L, n) > 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise ShootingError(f"semi-wave shooting could not bracket U'(0) at k={k}")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        res = _wave_shoot(mid, k, r, D, L, n)
        if res > 0:
            hi = mid
        elif res < 0:
            lo = mid
        else:
            return mid
    return 0.5 * (lo + hi)


def stefan_wave_speed(r: float, D: float, mu: float, L: float | None = None,
                      step: float | None = None, tol: float = 1e-10) -> float:
    """Asymptotic front speed k0 of the Stefan problem, root of mu U_k'(0) = k.

    The wave equation uses the unit-capacity logistic r U (1 - U).
    """
    if not (r > 0 and D > 0 and mu > 0):
        raise ValueError("need r, D, mu > 0")
    scale = math.sqrt(D / r)
    L = 50 * scale if L is None else L
    step = 2e-3 * scale if step is None else step
    n = int(math.ceil(L / step))
    kmax = 2 * math.sqrt(r * D)
    lo, hi = 0.0, kmax
    # mu U'(0) - k is positive at k=0 and tends to -kmax as k -> kmax
    while hi - lo > tol * kmax:
        mid = 0.5 * (lo + hi)
        if mu * _wave_slope(mid, r, D, L, n) - mid > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stefan_wave_speed_logistic(r: float, a: float, D: float, mu: float, **kw) -> float:
    """Front speed for growth r u (a - u); u = a U maps it to the unit-capacity wave."""
    return stefan_wave_speed(r * a, D, mu * a, **kw)
