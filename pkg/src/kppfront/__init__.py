"""Fisher-KPP populations with a nonlocally weighted free boundary."""
from .kernels import (
    KernelParams,
    SampledFunction,
    boundary_functional,
    delta_seq_S,
    delta_seq_w,
    eval_kernel,
    kernel_integral,
    kernel_root,
)
from .problem import (
    ConfigError,
    Polynomial,
    ProblemConfig,
    ReactionSpec,
    RuntimeBounds,
    State,
    Tabulated,
    a_priori_bounds,
    build_initial_state,
    validate,
)
from .solver import NumericsConfig, Trajectory, regrid, simulate, simulate_scaled, simulate_stefan, step

__version__ = "0.1.0"
