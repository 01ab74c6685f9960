"""Solvability of random QUBO problems with variational quantum loss
functions under stochastic noise: simulation, optimization, fits and
shot-requirement projections."""

__version__ = "0.1.0"

from .config import ExperimentConfig, default_config, load_config
from .fitting import fit_decay, fit_tanh, project_shots, resilience_metrics
from .losses import build_loss, exact_loss, gradient, normalized_loss
from .metrics import approximation_index, approximation_ratio, most_probable_state, solvability
from .noise import NoiseSpec, noisy_loss, rae
from .optimizers import NoisyLossOracle, OptimizerSpec, init_params, register_optimizer, run
from .problems import (
    IsingModel,
    QuboInstance,
    brute_force_solve,
    cmax_bound,
    generate_random_qubo,
    ising_energy,
    qubo_to_ising,
)
from .sweep import run_sweep

__all__ = [
    "__version__",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "fit_decay",
    "fit_tanh",
    "project_shots",
    "resilience_metrics",
    "build_loss",
    "exact_loss",
    "gradient",
    "normalized_loss",
    "approximation_index",
    "approximation_ratio",
    "most_probable_state",
    "solvability",
    "NoiseSpec",
    "noisy_loss",
    "rae",
    "NoisyLossOracle",
    "OptimizerSpec",
    "init_params",
    "register_optimizer",
    "run",
    "IsingModel",
    "QuboInstance",
    "brute_force_solve",
    "cmax_bound",
    "generate_random_qubo",
    "ising_energy",
    "qubo_to_ising",
    "run_sweep",
]
