"""Deterministic discrete-event simulator for multipath real-time video."""

from .config import ExperimentConfig, FlowConfig, SessionConfig, load_config, resolve_config
from .experiment import RunResult, prepare_experiment, run_experiment
from .net import ConfigError
from .sim import SimulationError, Simulator

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExperimentConfig", "FlowConfig", "RunResult", "SessionConfig",
    "SimulationError", "Simulator", "load_config", "prepare_experiment", "resolve_config",
    "run_experiment",
]
