"""Fixed points of nonlinear contractions on distance spaces without axioms."""

__version__ = "0.1.0"

from .comparison import (  # noqa: E402
    PiecewiseFn,
    affine,
    check_boyd_wong,
    check_comparison,
    check_matkowski,
    check_pasicki,
    check_phi_membership,
    iterate_to_zero,
    max_combine,
    monotone_envelope,
    one_sided_limits,
)
from .constructions import orbit_max_space, star_space, verify_inheritance  # noqa: E402
from .expr import parse_expression  # noqa: E402
from .io import load_instance  # noqa: E402
from .maps import (  # noqa: E402
    SelfMap,
    check_banach,
    check_d_continuity,
    check_extended_contraction,
    check_iterated_contraction,
    check_nonlinear_contraction,
    compose_power,
)
from .solver import (  # noqa: E402
    Banach,
    Extended,
    Iterated,
    Nonlinear,
    Quasi,
    SolveOptions,
    brute_force_fixed_points,
    picard_orbit,
    power_map_reduction,
    solve_fixed_point,
)
from .spaces import (  # noqa: E402
    AnalyticDistanceSpace,
    Domain,
    FiniteDistanceSpace,
    SamplerConfig,
    check_left_cauchy,
    check_w3,
    classify_axioms,
    closed_sets,
    find_jms_pair,
    is_open,
    jms_witness,
)
