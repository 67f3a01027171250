"""Randomized Kaczmarz on noisy, possibly inconsistent linear systems.

Solver, closed-form expectation formulas and error bounds relative to an
arbitrary reference point, smallest limiting balls, synthetic and LIBSVM
instances, and a reproducible Monte Carlo harness.
"""
from .bounds import (
    BallEstimate,
    BoundCurve,
    ReferenceFrame,
    ball_for_reference,
    construct_minimizing_pair,
    exact_mean_iterate,
    exact_mean_iterates,
    expected_singular_coefficient,
    make_frame,
    mean_bound_curve,
    mse_bound_curve,
    smallest_ball,
    underlying_pair_bound,
)
from .linalg import SvdFactors, min_norm_least_squares, project_null_space, project_row_space, svd
from .sampling import RowDistribution, build_row_distribution, make_rng, sample_row
from .solver import (
    IterateTrace,
    LinearSystem,
    RkRunConfig,
    default_checkpoints,
    empirical_expectations,
    rk_step,
    run_replicates,
    run_rk,
)

__version__ = "0.1.0"
