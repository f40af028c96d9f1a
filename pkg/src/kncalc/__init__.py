"""Numerical Kohn-Nirenberg calculus on one-dimensional degenerate model geometries."""
from .config import RunConfig, load_config
from .expmap import Cutoff, FlowOp, exp_point, flow_apply, make_cutoff, tau
from .extensions import (
    SemiclassicalFamily,
    SuspendedOperator,
    SuspendedSymbol,
    ZGrid,
    check_invariance,
    semiclassical_apply,
    suspended_apply,
)
from .geometry import GridFunction, ModelGeometry, ModelKind, anchor_apply, make_model
from .quantize import (
    DenseOperator,
    adjoint,
    apply,
    assemble_kernel,
    compose,
    conjugate_by_flow,
    conjugate_by_power,
    generator_chain,
    recover_symbol,
)
from .symbols import (
    PolySymbol,
    Symbol,
    estimate_order,
    jbracket,
    jbracket_power,
    poisson_bracket,
    poly_symbol,
    principal_symbol,
    symbol_from_name,
    vector_field_symbol,
)

__version__ = "0.1.0"
