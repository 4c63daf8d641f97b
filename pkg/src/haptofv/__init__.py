"""Positivity-preserving finite-volume solver and analysis harness for a
regularized double-haptotaxis model of cartilage regeneration."""

from .grid import Grid
from .model import (
    DomainError,
    ModelParams,
    Regularization,
    TransitionFn,
    ValidationError,
    f_eps,
    reaction_rhs,
)
from .monitors import MonitorConfig, MonitorReport
from .stepper import State, StepControl, Trajectory, run, step

__version__ = "0.1.0"

__all__ = [
    "DomainError", "Grid", "ModelParams", "MonitorConfig", "MonitorReport", "Regularization",
    "State", "StepControl", "Trajectory", "TransitionFn", "ValidationError", "f_eps",
    "reaction_rhs", "run", "step",
]
