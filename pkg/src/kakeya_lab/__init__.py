"""Exact incidence geometry over F_q^n with certified union lower bounds."""

from .bound_engines import (
    cordoba_lower_bound,
    cordoba_prime,
    hairbrush_bound,
    make_certificate,
    planebrush_bound,
    replay_certificate,
    theorem_ratio,
)
from .errors import (
    CapExceeded,
    DomainMismatch,
    EmptyFamily,
    FamilyParseError,
    HypothesisFailed,
    InvariantViolation,
    InversionOfZero,
    KakeyaLabError,
    NotPlany,
    NotPrime,
    PreconditionFailed,
    UnsupportedDimension,
    ZeroDirection,
)
from .field_geometry import Flat, Line, PrimeModulus, line_new, span_flat
from .incidence_axioms import IncidenceTable, multiplicity, planiness_check, triple_count, wolff_axiom_report
from .line_families import (
    LineFamily,
    PointSet,
    bush_family,
    kakeya_family,
    load_family,
    parallel_pencil_family,
    parse_family,
    plane_pencil_family,
    random_family,
    save_family,
    union_points,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
