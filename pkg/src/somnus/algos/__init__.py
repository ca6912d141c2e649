from .base import Policy
from .doubling import SbExp3Anytime
from .ftarl import Ftarl
from .sb_exp3 import SbExp3, regret_increments
from .tsallis import (SolverFailure, shannon_objective, shannon_weights, tsallis_objective,
                      tsallis_weights)
from .tuning import MODES, Tuning, tune

__all__ = [
    "Policy", "SbExp3", "SbExp3Anytime", "Ftarl", "regret_increments", "SolverFailure",
    "tsallis_weights", "tsallis_objective", "shannon_weights", "shannon_objective",
    "tune", "Tuning", "MODES",
]
