"""Sleeping-bandit algorithms, environments and a regret verification harness."""

from .algos import Ftarl, Policy, SbExp3, SbExp3Anytime, tsallis_weights, tune
from .bounds import theoretical_bound
from .config import ExperimentConfig
from .core import ActiveRound, RegretLedger, sample
from .envs import (EnvironmentScript, confidence_env, lower_bound_env, random_env, stochastic_env,
                   switching_env)
from .experts import Restarted, SeExp4, VirtualExpertPool, VirtualSeExp4
from .harness import RegretReport, run_episode, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ActiveRound", "EnvironmentScript", "ExperimentConfig", "Ftarl", "Policy", "RegretLedger",
    "RegretReport", "Restarted", "SbExp3", "SbExp3Anytime", "SeExp4", "VirtualExpertPool",
    "VirtualSeExp4", "confidence_env", "lower_bound_env", "random_env", "run_episode",
    "run_experiment", "sample", "stochastic_env", "switching_env", "theoretical_bound",
    "tsallis_weights", "tune",
]
