"""Discrete laboratory for fractional total-variation denoising with L1 fidelity.

The package evaluates fractional perimeters and nonlocal total
variation on pixel grids, solves the associated denoising model
exactly through level-set decomposition and min-cut, computes
fractional Cheeger constants, and ships a verification suite for the
model's structural identities (coarea, scaling, submodularity,
comparison, complement duality, fidelity thresholds).
"""

__version__ = "0.1.0"

from .energy import (
    CoareaDecomposition,
    EnergyBreakdown,
    coarea_decompose,
    exterior_exposure,
    frac_perimeter,
    frac_total_variation,
    functional_energy,
    geometric_energy,
)
from .grid import (
    DomainMismatchError,
    GridDomain,
    PixelSet,
    ScalarField,
    level_set,
    measure,
    set_algebra,
    symm_diff_measure,
)
from .kernel import Kernel, build_kernel, tail_mass
from .mincut import (
    CutProblem,
    CutSolution,
    ParametricSweep,
    SweepPoint,
    build_cut_problem,
    parametric_sweep,
    solve_cut,
)
from .netpbm import (
    read_csv_field,
    read_field,
    read_pbm,
    read_pgm,
    write_csv_field,
    write_field,
    write_pbm,
    write_pgm,
)
from .solvers import (
    CheegerResult,
    IdentityCheck,
    LayeredSolution,
    SolveReport,
    TrichotomyReport,
    ball_perimeter_constant,
    cheeger,
    high_fidelity_threshold,
    is_discrete_convex,
    low_fidelity_certificate,
    make_disk,
    make_rectangle,
    solve_functional,
    trichotomy,
    truncation_checks,
    zero_threshold,
)
from .verify import TheoremReport, VerifyConfig, run_suite

__all__ = [
    "__version__",
    "GridDomain",
    "PixelSet",
    "ScalarField",
    "DomainMismatchError",
    "level_set",
    "set_algebra",
    "measure",
    "symm_diff_measure",
    "Kernel",
    "build_kernel",
    "tail_mass",
    "EnergyBreakdown",
    "CoareaDecomposition",
    "frac_perimeter",
    "frac_total_variation",
    "coarea_decompose",
    "functional_energy",
    "geometric_energy",
    "exterior_exposure",
    "CutProblem",
    "CutSolution",
    "SweepPoint",
    "ParametricSweep",
    "build_cut_problem",
    "solve_cut",
    "parametric_sweep",
    "LayeredSolution",
    "SolveReport",
    "CheegerResult",
    "IdentityCheck",
    "TrichotomyReport",
    "solve_functional",
    "truncation_checks",
    "cheeger",
    "zero_threshold",
    "low_fidelity_certificate",
    "high_fidelity_threshold",
    "ball_perimeter_constant",
    "trichotomy",
    "is_discrete_convex",
    "make_disk",
    "make_rectangle",
    "read_pgm",
    "write_pgm",
    "read_pbm",
    "write_pbm",
    "read_csv_field",
    "write_csv_field",
    "read_field",
    "write_field",
    "VerifyConfig",
    "TheoremReport",
    "run_suite",
]
