"""Joint linear precoding and DFT beam selection for multi-beam satellite payloads."""

from .assignment import assignment_weights, brute_force_assignment, hungarian
from .baselines import (
    SCHEMES,
    SchemeResult,
    dft_only,
    greedy_assignment,
    mf_fdp,
    mmse_fdp,
    zf_precoder,
)
from .codebook import DftCodebook, Window, apply_codebook, build_codebook, effective_channel
from .geometry import ArrayConfig, Geometry, Scenario, Scene, build_scene, drop_users, steering_vector
from .metrics import mse, sinr, sum_rate, wmmse_objective
from .model import Assignment, total_power
from .solver import SolverConfig, SolverState, solve, solve_beta

__version__ = "0.1.0"
