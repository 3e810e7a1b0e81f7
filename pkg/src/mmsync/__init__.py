"""mmsync: multi-machine power-system synchronization.

Port-Hamiltonian machine+network model, steady-state network-flow map,
network potential on the angle torus, and the synchronizing feedback laws,
with a CLI simulator reproducing a 3-machine benchmark.
"""

from ._kernel import BACKEND as kernel_backend
from .model import ConfigError, ControlInput, CoEnergy, State, SystemParams
from .control import ControllerSpec
from .sim import IntegratorConfig, SimulationAborted, Trajectory, build_initial_state, simulate
from .steady_state import SteadyStateMap, solve_pi
from .potential import PotentialEvaluator

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ControlInput",
    "CoEnergy",
    "ControllerSpec",
    "IntegratorConfig",
    "PotentialEvaluator",
    "SimulationAborted",
    "State",
    "SteadyStateMap",
    "SystemParams",
    "Trajectory",
    "build_initial_state",
    "kernel_backend",
    "simulate",
    "solve_pi",
    "__version__",
]
