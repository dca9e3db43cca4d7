"""Problem configuration, initial data and the a-priori bounds on u and h'."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .kernels import KernelParams, SampledFunction

NONLOCAL = "nonlocal"
STEFAN = "stefan"

MIN_CELLS = 8
BOUNDARY_TOL = 1e-12


class ConfigError(ValueError):
    """Raised for configurations that cannot be simulated."""


@dataclass(frozen=True)
class ReactionSpec:
    """Logistic growth ``f(u) = r u (a - u)``."""

    r: float = 1.0
    a: float = 5.0

    @property
    def linear_rate(self) -> float:
        return self.r * self.a


@dataclass(frozen=True)
class Polynomial:
    """``u0(x) = beta (h0^2 - x^2)``; centered on [-h0, h0] in two-boundary runs."""

    beta: float


@dataclass(frozen=True)
class Tabulated:
    profile: SampledFunction
    path: Optional[str] = None


InitialCondition = Union[Polynomial, Tabulated]


@dataclass(frozen=True)
class ProblemConfig:
    D: float = 1.0
    mu: float = 1.0
    reaction: ReactionSpec = field(default_factory=ReactionSpec)
    kernel_right: Optional[KernelParams] = None
    kernel_left: Optional[KernelParams] = None
    h0: float = 3.0
    g0: Optional[float] = None
    boundary_rule: str = NONLOCAL
    initial: InitialCondition = field(default_factory=lambda: Polynomial(0.01))

    @property
    def two_sided(self) -> bool:
        return self.g0 is not None

    @property
    def left_end(self) -> float:
        return 0.0 if self.g0 is None else self.g0

    def with_knob(self, knob: str, value: float) -> "ProblemConfig":
        """Copy with one scalar parameter changed.

        Kernel knobs address the kernel named by the config-file convention:
        in two-sided runs c1..alpha2 belong to the left kernel and c3..alpha4 to
        the right one.
        """
        value = float(value)
        if knob in ("D", "mu", "h0"):
            cfg = replace(self, **{knob: value})
            if knob == "h0" and self.two_sided:
                cfg = replace(cfg, g0=-value)
            return cfg
        if knob in ("r", "a"):
            return replace(self, reaction=replace(self.reaction, **{knob: value}))
        if knob == "beta":
            if not isinstance(self.initial, Polynomial):
                raise ConfigError("knob 'beta' needs a polynomial initial condition")
            return replace(self, initial=Polynomial(value))
        first = {"c1": "c1", "c2": "c2", "alpha1": "alpha1", "alpha2": "alpha2"}
        second = {"c3": "c1", "c4": "c2", "alpha3": "alpha1", "alpha4": "alpha2"}
        if knob in first:
            attr = "kernel_left" if self.two_sided else "kernel_right"
            return replace(self, **{attr: replace(getattr(self, attr), **{first[knob]: value})})
        if knob in second and self.two_sided:
            return replace(self, kernel_right=replace(self.kernel_right, **{second[knob]: value}))
        raise ConfigError(f"unknown knob {knob!r}")


@dataclass(frozen=True)
class RuntimeBounds:
    M: float
    K: float
    K_left: Optional[float] = None


@dataclass(frozen=True)
class State:
    """Solution on a uniform grid spanning the current range [g, h]."""

    t: float
    g: float
    h: float
    u: np.ndarray

    @property
    def dx(self) -> float:
        return (self.h - self.g) / (self.u.size - 1)

    @property
    def profile(self) -> SampledFunction:
        return SampledFunction(self.g, self.dx, self.u)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.g, self.h, self.u.size)


def initial_profile(config: ProblemConfig):
    """Callable u0 on the initial range."""
    ic = config.initial
    if isinstance(ic, Polynomial):
        h0 = config.h0
        return lambda x: ic.beta * (h0 * h0 - np.asarray(x, dtype=float) ** 2)
    return ic.profile


def validate(config: ProblemConfig) -> list[str]:
    """All violated invariants; an empty list means the config is usable."""
    bad = []
    if not config.D > 0:
        bad.append("D>0 required")
    if not config.mu > 0:
        bad.append("mu>0 required")
    if not config.h0 > 0:
        bad.append("h0>0 required")
    if config.g0 is not None and not config.g0 < config.h0:
        bad.append("g0<h0 required")
    if not config.reaction.r >= 0:
        bad.append("r>=0 required")
    if not config.reaction.a > 0:
        bad.append("a>0 required")

    if config.boundary_rule == STEFAN:
        if config.kernel_right is not None or config.kernel_left is not None:
            bad.append("stefan rule takes no kernels")
        if config.two_sided:
            bad.append("stefan rule is one-sided only")
    elif config.boundary_rule == NONLOCAL:
        if config.kernel_right is None:
            bad.append("nonlocal rule needs a kernel")
        else:
            bad.extend(config.kernel_right.violations(allow_equal=config.two_sided))
        if config.two_sided:
            if config.kernel_left is None:
                bad.append("two-sided run needs a left kernel")
            else:
                bad.extend(f"left kernel: {v}"
                           for v in config.kernel_left.violations(allow_equal=True))
        elif config.kernel_left is not None:
            bad.append("left kernel given for a one-sided run")
    else:
        bad.append(f"unknown boundary rule {config.boundary_rule!r}")

    bad.extend(_initial_violations(config))
    return bad


def _initial_violations(config: ProblemConfig) -> list[str]:
    ic = config.initial
    g0, h0 = config.left_end, config.h0
    if isinstance(ic, Polynomial):
        if not ic.beta > 0:
            return ["beta>0 required"]
        if config.two_sided and abs(g0 + h0) > BOUNDARY_TOL * h0:
            return ["polynomial initial data needs g0=-h0"]
        return []
    prof = ic.profile
    span_tol = 1e-9 * max(1.0, h0 - g0)
    out = []
    if abs(prof.x0 - g0) > span_tol or abs(prof.x1 - h0) > span_tol:
        out.append(f"tabulated u0 covers [{prof.x0}, {prof.x1}], expected [{g0}, {h0}]")
    v = prof.values
    if abs(v[-1]) > BOUNDARY_TOL:
        out.append("tabulated u0 must vanish at h0")
    if config.two_sided and abs(v[0]) > BOUNDARY_TOL:
        out.append("tabulated u0 must vanish at g0")
    inner = v[1:-1] if config.two_sided else v[:-1]
    if np.any(inner <= 0):
        out.append("tabulated u0 must be positive inside the range")
    return out


def build_initial_state(config: ProblemConfig, dx: float) -> State:
    bad = validate(config)
    if bad:
        raise ConfigError("; ".join(bad))
    g0, h0 = config.left_end, config.h0
    if not dx > 0 or (h0 - g0) / dx < MIN_CELLS:
        raise ConfigError(f"grid too coarse: need (h0-g0)/dx >= {MIN_CELLS}, dx={dx}")
    n = int(round((h0 - g0) / dx))
    x = np.linspace(g0, h0, n + 1)
    u = np.asarray(initial_profile(config)(x), dtype=float)
    if config.two_sided and isinstance(config.initial, Polynomial):
        # linspace nodes are not bitwise symmetric about 0; the data should be
        u = 0.5 * (u + u[::-1])
    u[-1] = 0.0
    if config.two_sided:
        u[0] = 0.0
    return State(0.0, g0, h0, u)


def sup_initial(config: ProblemConfig) -> float:
    ic = config.initial
    if isinstance(ic, Polynomial):
        return ic.beta * config.h0**2
    return float(ic.profile.values.max())


def a_priori_bounds(config: ProblemConfig) -> RuntimeBounds:
    """Sup bound M on u and upper bound K on the boundary speed.

    M comes from the logistic upper solution; without growth (r = 0) the
    maximum principle leaves only the initial sup.
    """
    if config.boundary_rule != NONLOCAL:
        raise ConfigError("a-priori speed bound is only available for the nonlocal rule")
    u0max = sup_initial(config)
    M = u0max if config.reaction.r == 0 else max(config.reaction.a, u0max)

    def speed(kp: KernelParams) -> float:
        return config.mu * M * (kp.c1 / kp.alpha1 + kp.c2 / kp.alpha2)

    K_left = speed(config.kernel_left) if config.two_sided else None
    return RuntimeBounds(M, speed(config.kernel_right), K_left)


def critical_length(D: float, a: float) -> float:
    """Half-length below which Dirichlet-Neumann growth ``a`` cannot beat diffusion."""
    if not (D > 0 and a >= 0):
        raise ValueError("need D>0 and a>=0")
    if a == 0:
        return math.inf
    return 0.5 * math.pi * math.sqrt(D / a)
