"""Indirect-shooting trajectory optimizer for powered endo-atmospheric ascent.

Pipeline: an analytical line-of-sight guidance law seeds a shooting solve
of a reduced arc-length problem; a continuation first morphs the dynamics
from drag-only coasting to full powered flight, then slides the terminal
point to the requested one.
"""

from .continuation import (ContinuationOpts, HomotopyState, OptimalSolution,
                           continue_lambda1, continue_lambda2, solve, step_one,
                           sweep_m0)
from .errors import AscentError, ScenarioError, SolverFailure
from .scenario import BUILTIN_SCENARIOS, Scenario, load_scenario, save_scenario
from .shooting import NewtonOpts, newton_solve
from .trajectory import Trajectory
from .vehicle import DEFAULT_PARAMS, VehicleParams

__all__ = [
    "AscentError",
    "BUILTIN_SCENARIOS",
    "ContinuationOpts",
    "DEFAULT_PARAMS",
    "HomotopyState",
    "NewtonOpts",
    "OptimalSolution",
    "Scenario",
    "ScenarioError",
    "SolverFailure",
    "Trajectory",
    "VehicleParams",
    "continue_lambda1",
    "continue_lambda2",
    "load_scenario",
    "newton_solve",
    "save_scenario",
    "solve",
    "step_one",
    "sweep_m0",
]

__version__ = "0.1.0"
