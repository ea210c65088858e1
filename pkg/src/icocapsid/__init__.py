"""Deformation of an icosahedral capsid lying on a rigid plane.

Static obstacle problem, irreversible-adhesion equilibrium and penalized
elastodynamics for a linear elastic icosahedral cage.
"""

from .dynamics import (
    PenaltyProblem,
    Trajectory,
    integrate,
    kappa_sweep,
    modal_solution,
    penalty_force,
    penalty_operator,
    stable_dt,
)
from .energy import (
    EnergyModel,
    assemble,
    bend_energy,
    bend_rows,
    certify_spectrum,
    gradient,
    stretch_energy,
    total_energy,
)
from .errors import ConfigError, InstabilityError, OracleError, SolverError
from .geometry import CapsidGeometry, angular_defect, angular_defects, build_icosahedron, deformed_positions
from .statics import (
    ContactState,
    StaticResult,
    oracle_projected_gradient,
    solve_adhesion_equilibrium,
    solve_obstacle,
    uniform_force,
)

__version__ = "0.1.0"
