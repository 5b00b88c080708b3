"""Potential functions for vector DE recursions: exact construction and numerics."""
from .functional import (
    GapSearchConfig,
    ThresholdReport,
    WBound,
    coupled_potential_grad,
    coupled_potential_U,
    de_map,
    energy_gap,
    monotone_grid,
    nontrivial_fixed_points,
    potential_grad,
    potential_threshold,
    potential_U,
    w_bound,
)
from .system import (
    ConditionResult,
    Equation,
    Infeasible,
    LinearSystem,
    PotentialSolution,
    bilayer_system,
    build_linear_system,
    check_necessary_condition,
    counting_formulas,
    load_system,
    shape_mask,
    solve_potential,
    solve_system,
)


def nonbinary_potential(p, shape="positive") -> PotentialSolution:
    """Extract f, g for a (dv, dc, m) ensemble and solve for D, F, G."""
    from ..polynomial import extract_de_polynomials
    f, g = extract_de_polynomials(p)
    return solve_potential(f, g, shape)
