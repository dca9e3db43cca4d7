import functools
import sys

import numpy as np
import pytest

from kppfront import KernelParams, NumericsConfig, Polynomial, ProblemConfig, ReactionSpec
from kppfront.solver import simulate, simulate_scaled, simulate_stefan


def par1(c1=1.5, c2=1.0, alpha1=1.9, alpha2=1.0, h0=3.0, beta=0.01, r=1.0, a=5.0, D=1.0,
         mu=1.0):
    return ProblemConfig(D=D, mu=mu, reaction=ReactionSpec(r, a),
                         kernel_right=KernelParams(c1, c2, alpha1, alpha2), h0=h0,
                         initial=Polynomial(beta))


def two_sided(c1, c3=3.3, h0=3.0, beta=0.01):
    return ProblemConfig(kernel_left=KernelParams(c1, 1.0, 1.9, 1.0),
                         kernel_right=KernelParams(c3, 1.0, 1.9, 1.0), h0=h0, g0=-h0,
                         initial=Polynomial(beta))


DEFAULT = NumericsConfig()


@functools.lru_cache(maxsize=None)
def cached_simulate(config, num=DEFAULT):
    return simulate(config, num)


@functools.lru_cache(maxsize=None)
def cached_stefan(config, num=DEFAULT):
    return simulate_stefan(config, num)


@functools.lru_cache(maxsize=None)
def cached_scaled(config, num=DEFAULT):
    return simulate_scaled(config, num)


@pytest.fixture
def rng():
    return np.random.default_rng(20260114)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
