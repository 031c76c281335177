"""Homogeneous star products on duals of Lie algebroids, computed exactly over Q(i)."""
from .scalar import GQ, I, ONE, ZERO, frac, render_scalar
from .poly import Poly, StructureError, VarSpec, parse, render
from .cochain import (
    Cochain,
    EquivalenceSeries,
    StarSeries,
    alt,
    apply,
    gerstenhaber,
    hochschild_d,
    homogeneity_degree,
    is_homogeneous,
    mc_defect,
    mu0,
)
from .hkr import InfeasibleError, Multivector, PreconditionError, hkr, hkr_inv_closed, solve_potential
from .algebroid import (
    AForm,
    AlgebroidPresentation,
    Cohomology,
    cohomology,
    d_A,
    kks_bracket,
    parse_form,
    parse_presentation,
    render_form,
    render_presentation,
    validate,
    vertical_lift,
)
from .star import (
    StarError,
    apply_equivalence,
    build_star,
    check_equivalence,
    moyal_star,
    normalize_first_order,
    parse_star,
    render_equivalence,
    render_star,
    verify_star,
)
from .classes import ClassReport, EquivalenceVerdict, characteristic_class, class_of, decide_equivalence
from .gutt import EnvelopingAlgebra, gutt_as_series, gutt_product, pbw
from .reduction import (
    ConstraintPresentation,
    TheoremViolation,
    coisotropic_check,
    decide_proj_equivalence,
    make_projectable,
    parse_constraint,
    projectability_check,
    pullback_class_test,
    qr_diagram_check,
    reduce_star,
    representation_solver,
)

__version__ = "0.1.0"
