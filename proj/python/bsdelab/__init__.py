"""Monte Carlo solver laboratory for Markovian quadratic and superquadratic BSDEs."""

from _bsdelab import (  # noqa: F401
    NumericalError,
    ProblemSpec,
    RegularityParams,
    SpecError,
    bounded_sine,
    check_b1_threshold,
    closed_form_linear,
    cole_hopf_y,
    critical_envelope,
    euler_paths,
    linear_terminal,
    lipschitz_z_bound,
    load_problem,
    problem_from_json,
    quadratic_sine,
    select_M,
    small_time_radius,
    smooth_truncation,
    solve,
    subcritical_limit,
    superquadratic_sine,
)

__all__ = [
    "NumericalError",
    "ProblemSpec",
    "RegularityParams",
    "SpecError",
    "bounded_sine",
    "check_b1_threshold",
    "closed_form_linear",
    "cole_hopf_y",
    "critical_envelope",
    "euler_paths",
    "linear_terminal",
    "lipschitz_z_bound",
    "load_problem",
    "problem_from_json",
    "quadratic_sine",
    "select_M",
    "small_time_radius",
    "smooth_truncation",
    "solve",
    "subcritical_limit",
    "superquadratic_sine",
]
