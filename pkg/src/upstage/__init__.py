"""Upper-stage attitude GNC workbench.

A coupled multi-physics plant simulator, a flight-software stack, a
lockstep processor-in-the-loop harness, and a verification layer for
long-coast attitude control studies.
"""

__version__ = "0.1.0"

from .config import ConfigInvalid, Scenario, load_scenario, validate_scenario
from .plant import (VehicleState, effective_inertia, inertial_momentum,
                    make_initial_state, nutation_half_cone, step_dynamics)

__all__ = [
    "ConfigInvalid", "Scenario", "load_scenario", "validate_scenario",
    "VehicleState", "effective_inertia", "inertial_momentum",
    "make_initial_state", "nutation_half_cone", "step_dynamics",
]
