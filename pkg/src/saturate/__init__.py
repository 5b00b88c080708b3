"""BP and potential thresholds for nonbinary and spatially coupled LDPC ensembles on the BEC."""
from .de_engine import (
    CoupledParams,
    DEReport,
    EnsembleParams,
    bp_threshold,
    coupled_bp_threshold,
    coupled_de,
    de_fixed_point,
)
from .polynomial import EpsPoly, MultiPoly, extract_de_polynomials
from .potential import (
    Infeasible,
    PotentialSolution,
    energy_gap,
    nonbinary_potential,
    potential_threshold,
    potential_U,
    solve_potential,
)

__version__ = "0.1.0"
