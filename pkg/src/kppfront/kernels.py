"""Exponential weight kernels and the weighted-population boundary functional.

The kernel ``w(z) = c1 exp(-alpha1 z) - c2 exp(-alpha2 z)`` weighs population at
distance ``z`` from a free boundary.  Integrals of piecewise-linear profiles
against it are evaluated exactly, cell by cell, from the closed-form moments of
``theta -> theta * exp(-beta theta)`` on ``[0, 1]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

# Cells whose exponential weight is below exp(-EXP_FLOOR) are dropped: their
# contribution is ~1e-26 relative to the cell next to the boundary.
EXP_FLOOR = 60.0


@dataclass(frozen=True)
class KernelParams:
    c1: float
    c2: float
    alpha1: float
    alpha2: float

    def violations(self, allow_equal: bool = False) -> list[str]:
        """Broken invariants.  ``allow_equal`` admits c1 = c2, the purely contracting
        kernel (w <= 0 everywhere) used for the left end of two-sided runs."""
        out = []
        if not self.c2 > 0:
            out.append("c2>0 required")
        if allow_equal:
            if not self.c1 >= self.c2:
                out.append("c1>=c2 required")
        elif not self.c1 > self.c2:
            out.append("c1>c2 required")
        if not self.alpha2 > 0:
            out.append("alpha2>0 required")
        if not self.alpha1 > self.alpha2:
            out.append("alpha1>alpha2 required")
        return out

    def check(self) -> "KernelParams":
        bad = self.violations()
        if bad:
            raise ValueError("; ".join(bad))
        return self

    @classmethod
    def delta_family(cls, n: int) -> "KernelParams":
        """Kernel whose values coincide with ``delta_seq_w(n, .)`` on z >= 0."""
        n = float(n)
        return cls(n**3, n**2, n**2, n)

    @property
    def terms(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.c1, self.alpha1), (-self.c2, self.alpha2))


@dataclass(frozen=True)
class SampledFunction:
    """Uniform samples ``values[j]`` at ``x0 + j*dx``, linear between nodes."""

    x0: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("SampledFunction needs at least 2 samples")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    def __eq__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        return (self.x0 == other.x0 and self.dx == other.dx
                and np.array_equal(self.values, other.values))

    __hash__ = None

    @classmethod
    def on_interval(cls, lo: float, hi: float, values) -> "SampledFunction":
        values = np.asarray(values, dtype=float)
        return cls(float(lo), (hi - lo) / (values.size - 1), values)

    @property
    def n_cells(self) -> int:
        return self.values.size - 1

    @property
    def x1(self) -> float:
        return self.x0 + self.n_cells * self.dx

    @property
    def nodes(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.values.size)

    def __call__(self, x):
        """Piecewise-linear evaluation; zero outside the sampled interval."""
        return np.interp(x, self.nodes, self.values, left=0.0, right=0.0)

    def integral(self) -> float:
        v = self.values
        return float(self.dx * (v.sum() - 0.5 * (v[0] + v[-1])))


def eval_kernel(kp: KernelParams, z):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("kernel is defined for nonnegative offsets only")
    out = kp.c1 * np.exp(-kp.alpha1 * z) - kp.c2 * np.exp(-kp.alpha2 * z)
    return float(out) if out.ndim == 0 else out


def kernel_root(kp: KernelParams) -> float:
    """Offset where w changes sign: short-range weight is positive, long-range negative."""
    return math.log(kp.c1 / kp.c2) / (kp.alpha1 - kp.alpha2)


def kernel_integral(kp: KernelParams, lo: float, hi: float) -> float:
    """Closed-form integral of w over [lo, hi]; ``hi`` may be ``math.inf``."""
    if lo < 0:
        raise ValueError("lo must be nonnegative")
    if lo > hi:
        raise ValueError(f"empty interval: lo={lo} > hi={hi}")
    if lo == hi:
        return 0.0
    total = 0.0
    for c, a in kp.terms:
        far = 0.0 if math.isinf(hi) else math.exp(-a * hi)
        total += c / a * (math.exp(-a * lo) - far)
    return total


@numba.njit(cache=True)
def _cell_moments(beta):
    # A0 = int_0^1 exp(-beta p) dp, A1 = int_0^1 p exp(-beta p) dp
    if beta < 1e-3:
        b2 = beta * beta
        a0 = 1.0 - beta / 2.0 + b2 / 6.0 - b2 * beta / 24.0 + b2 * b2 / 120.0
        a1 = 0.5 - beta / 3.0 + b2 / 8.0 - b2 * beta / 30.0 + b2 * b2 / 144.0
    else:
        em = -math.expm1(-beta)
        a0 = em / beta
        a1 = (em - beta * math.exp(-beta)) / (beta * beta)
    return a0, a1


@numba.njit(cache=True)
def exp_moment_right(values, dx, alpha):
    """Exact ``int u(x) exp(-alpha (x_end - x)) dx`` for piecewise-linear samples."""
    n = values.size - 1
    beta = alpha * dx
    a0, a1 = _cell_moments(beta)
    ratio = math.exp(-beta)
    e = 1.0
    acc = 0.0
    for j in range(n - 1, -1, -1):
        acc += e * (values[j] * a1 + values[j + 1] * (a0 - a1))
        if beta * (n - j) > EXP_FLOOR:
            break
        e *= ratio
    return dx * acc


@numba.njit(cache=True)
def exp_moment_left(values, dx, alpha):
    """Exact ``int u(x) exp(-alpha (x - x_start)) dx`` for piecewise-linear samples."""
    n = values.size - 1
    beta = alpha * dx
    a0, a1 = _cell_moments(beta)
    ratio = math.exp(-beta)
    e = 1.0
    acc = 0.0
    for j in range(n):
        acc += e * (values[j + 1] * a1 + values[j] * (a0 - a1))
        if beta * (j + 1) > EXP_FLOOR:
            break
        e *= ratio
    return dx * acc


@numba.njit(cache=True)
def weighted_mass(values, dx, c1, c2, alpha1, alpha2, right):
    """``int u w(distance to boundary)`` with the boundary at the last (right) or first node."""
    if right:
        return c1 * exp_moment_right(values, dx, alpha1) - c2 * exp_moment_right(values, dx, alpha2)
    return c1 * exp_moment_left(values, dx, alpha1) - c2 * exp_moment_left(values, dx, alpha2)


def boundary_functional(u: SampledFunction, kp: KernelParams, side: str, mu: float,
                        domain: tuple[float, float] | None = None) -> float:
    """Boundary velocity induced by the weighted population.

    ``side="right"`` gives ``mu * int_g^h u(x) w(h - x) dx``.  ``side="left"``
    integrates from h to g, ``-mu * int_g^h u(x) w(x - g) dx``, so a positive
    short-range mass pushes the left boundary outward (leftward).
    """
    if domain is not None:
        g, h = domain
        tol = 1e-9 * max(1.0, abs(g), abs(h))
        if abs(u.x0 - g) > tol or abs(u.x1 - h) > tol:
            raise ValueError(f"profile covers [{u.x0}, {u.x1}], expected [{g}, {h}]")
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    m = weighted_mass(u.values, u.dx, kp.c1, kp.c2, kp.alpha1, kp.alpha2, side == "right")
    return mu * m if side == "right" else -mu * m


def delta_seq_S(n: int, x):
    x = np.asarray(x, dtype=float)
    xp = np.where(x >= 0, x, 0.0)
    out = np.where(x >= 0, n * (np.exp(-n * xp) - np.exp(-float(n) ** 2 * xp)), 0.0)
    return float(out) if out.ndim == 0 else out


def delta_seq_w(n: int, x):
    x = np.asarray(x, dtype=float)
    n = float(n)
    xp = np.where(x >= 0, x, 0.0)
    out = np.where(x >= 0, n**3 * np.exp(-n * n * xp) - n**2 * np.exp(-n * xp), 0.0)
    return float(out) if out.ndim == 0 else out


def delta_seq_S_mass(n: int) -> float:
    """Closed-form total integral of S_n over the half line."""
    return 1.0 - 1.0 / n

