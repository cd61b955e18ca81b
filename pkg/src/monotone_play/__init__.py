"""Simulation and numerical certification of last-iterate learning
dynamics in smooth monotone games."""

from .dynamics import (
    SCLICoefficients,
    Trace,
    eg_regret_demo,
    gd_as_scli,
    og_as_scli,
    og_regret_run,
    run_eg,
    run_gd,
    run_og,
    run_og_peg,
    run_scli,
)
from .diagnostics import (
    best_iterate,
    best_iterate_bound,
    grad_gap,
    last_iterate_bound_check,
    rate_fit,
    total_gap_bilinear,
)
from .operators import (
    GameSpec,
    MonotoneOperator,
    check_monotone_and_smooth,
    make_bilinear,
    make_linear,
    make_perturbed_bilinear,
    make_quadratic_min,
    suboptimality,
    two_player_bilinear_game,
)
from .potential import (
    PotentialTrace,
    alpha_avg_jacobians,
    backward_pass,
    linear_closed_form_C,
    potential_identity_residuals,
    remainder_identity_residuals,
    step_matrix_bounds,
)
from .scli import (
    CompanionSystem,
    HardInstance,
    PolyPair,
    agd_polys,
    build_companion,
    classify_coefficients,
    hard_instance_convexmin,
    hard_instance_minmax,
    lowerbound_experiment,
    poly_radius,
    radius_sweep,
    spectral_floor,
    spectral_radius,
)

__version__ = "0.1.0"
