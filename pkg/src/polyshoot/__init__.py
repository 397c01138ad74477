"""Shooting solver for positive radial solutions of weighted polyharmonic
monomial systems, with degree-guided aiming and integral identity checks."""

from . import errors
from .analysis import (
    DecayFit,
    PohozaevReport,
    decay_fit,
    energy_identity,
    pohozaev_residual,
    radial_integral,
    sphere_area,
)
from .degree_solver import (
    DegreeReport,
    Label,
    SimplexGrid,
    build_grid,
    compute_degree,
    find_zero,
    label,
)
from .integrator import (
    Decayed,
    IvpControls,
    Outcome,
    Trajectory,
    Truncated,
    WallHit,
    integrate,
    locate_wall_event,
    series_start,
    trajectory_from_csv,
    trajectory_to_csv,
)
from .kernels import BACKEND_NAME
from .system_spec import (
    ChainLink,
    CriticalityReport,
    EquationSpec,
    Monomial,
    NondegeneracyReport,
    ReducedSystem,
    SourceTerm,
    SystemSpec,
    ValidationReport,
    check_nondegeneracy,
    classify_criticality,
    load_spec,
    reduce,
    scalar_supercritical_bracket,
    spec_from_dict,
    spec_to_dict,
    system_supercritical_bracket,
    validate,
)
from .target_map import TargetResult, phi, phi_inverse, psi, psi_batch

__version__ = "0.1.0"
