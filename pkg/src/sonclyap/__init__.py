"""Lyapunov stability certificates for polynomial ODEs via SONC and DSONC."""

__version__ = "0.1.0"

from .certificates import (  # noqa: E402
    DsoncWitness,
    SoncWitness,
    circuit_number,
    dsonc_membership,
    dsonc_membership_variable,
    is_nonneg_circuit,
    sonc_membership,
    verify_dsonc_witness,
    verify_sonc_witness,
)
from .conic import ConicProgram, SolverUnknown, Status, solve, solve_lp  # noqa: E402
from .geometry import barycentric, detect_circuit, is_strict_interior, polytope_vertices  # noqa: E402
from .lyapunov import (  # noqa: E402
    LyapunovResult,
    SignConstraintSet,
    StabilityReport,
    Verdict,
    build_epsilon_poly,
    distribute_signs,
    generate_support,
    reduce_redundant,
    search_dsonc,
    search_sonc,
    simulate,
    verify_candidate,
)
from .poly import (  # noqa: E402
    DynSystem,
    LinearFormPoly,
    SparsePoly,
    arith,
    evaluate,
    lie_derivative,
    lie_derivative_symbolic,
    parse_poly,
    support_split,
)
