"""Self-bound Bose-Einstein condensates with attractive 1/r interaction.

Gaussian variational dynamics, numerically exact stationary states, their
linear stability, and split-operator propagation of radial wave functions,
all in the scaled units where the norm is one.
"""

from .radial import GridViolation, RadialGrid, RadialWaveFunction
from .stationary import NoConvergence, NoStationaryState, StationaryState, solve_stationary
from .units import A_CRITICAL
from .variational import VariationalState, fixed_points

__all__ = [
    "A_CRITICAL",
    "GridViolation",
    "NoConvergence",
    "NoStationaryState",
    "RadialGrid",
    "RadialWaveFunction",
    "StationaryState",
    "VariationalState",
    "fixed_points",
    "solve_stationary",
]
__version__ = "0.1.0"
