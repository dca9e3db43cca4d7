"""Delta-sequence kernels w_n and the boundary-flux limit of the weighted functional.

``wn_functional`` integrates a piecewise-linear profile exactly against
``w_n(x) = n^3 exp(-n^2 x) - n^2 exp(-n x)``.  Integration by parts against
``S_n`` (with ``S_n' = w_n``) shows the value tends to ``+f'(h)``, i.e. to the
one-sided boundary slope, which is the negative of the classical Stefan
velocity ``-f'(h)``.  ``convergence_study`` reports errors against either
target.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .kernels import SampledFunction


@dataclass(frozen=True)
class LimitRow:
    n: int
    value: float
    target: float
    abs_error: float


def _cell_moments(beta):
    beta = np.asarray(beta, dtype=float)
    small = beta < 1e-3
    b = np.where(small, 1.0, beta)
    em = -np.expm1(-b)
    a0 = np.where(small, 1 - beta / 2 + beta**2 / 6 - beta**3 / 24, em / b)
    a1 = np.where(small, 0.5 - beta / 3 + beta**2 / 8 - beta**3 / 30,
                  (em - b * np.exp(-b)) / (b * b))
    return a0, a1


def _exp_moment(x, u, alpha, end):
    """Exact ``int u(x) exp(-alpha (end - x)) dx`` over the nodes ``x`` (nonuniform)."""
    s = np.diff(x)
    beta = alpha * s
    a0, a1 = _cell_moments(beta)
    weight = np.exp(-alpha * (end - x[1:]))
    return float(np.sum(s * weight * (u[:-1] * a1 + u[1:] * (a0 - a1))))


def wn_functional(n: int, f: SampledFunction, h: float) -> float:
    """``int_0^h w_n(x) f(h - x) dx`` for piecewise-linear ``f`` given on [0, h] or wider."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    tol = 1e-12 * max(1.0, abs(h))
    if f.x0 > tol or f.x1 < h - tol or h <= 0:
        raise ValueError(f"h={h} outside the support [{f.x0}, {f.x1}] of f")
    nodes = f.nodes
    inside = (nodes > 0.0) & (nodes < h)
    x = np.concatenate([[0.0], nodes[inside], [h]])
    u = f(x)
    # f(y) with y = h - x; distance to y = h is the kernel argument
    n = float(n)
    return n**3 * _exp_moment(x, u, n * n, h) - n**2 * _exp_moment(x, u, n, h)


def convergence_study(f: SampledFunction, h: float, ns: Sequence[int] = (10, 100, 1000),
                      fprime: Optional[Callable[[float], float]] = None,
                      sign: float = -1.0) -> list[LimitRow]:
    """Values of ``wn_functional`` against the target ``sign * f'(h)``.

    The default ``sign=-1`` is the Stefan velocity form; ``sign=+1`` is the
    limit the integration by parts actually produces.  Without ``fprime`` the
    slope at h is a second-order one-sided difference of the samples.
    """
    if fprime is not None:
        slope = float(fprime(h))
    else:
        d = f.dx
        slope = float((3 * f(h) - 4 * f(h - d) + f(h - 2 * d)) / (2 * d))
    target = sign * slope
    rows = []
    for n in ns:
        val = wn_functional(int(n), f, h)
        rows.append(LimitRow(int(n), val, target, abs(val - target)))
    return rows


def one_sided_flux(u: np.ndarray, dx: float) -> float:
    """Three-point one-sided slope at the last node, as used by the Stefan stepper."""
    return float((3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dx))


def empirical_rate(rows: Sequence[LimitRow]) -> float:
    """Log-log slope of error against n."""
    n = np.log([r.n for r in rows])
    e = np.log([max(r.abs_error, 1e-300) for r in rows])
    return float(np.polyfit(n, e, 1)[0])
