"""Classical Perlick type-I system on κ-deformed manifolds.

Unified Hamiltonian, its symmetry algebra, trajectories and closed orbits
for the sphere (κ > 0), Euclidean space (κ = 0) and hyperbolic space (κ < 0).
"""

from .errors import (
    ConfigError,
    DegenerateOrbitError,
    DomainError,
    IntegrationError,
    NoSolutionError,
    PerlickError,
    PoleError,
    StencilDomainError,
)
from .model import (
    EnergyBounds,
    ModelParams,
    PhasePoint,
    RPoint,
    TurningPoints,
    effective_potential,
    energy_bounds,
    hamiltonian_r,
    hamiltonian_xi,
    to_r_coords,
    to_xi_coords,
    turning_points,
)

__version__ = "0.1.0"
