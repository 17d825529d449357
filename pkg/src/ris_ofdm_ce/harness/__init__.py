"""Experiment orchestration: config, simulated link, training, sweeps, CLI."""

from .config import ConfigError, SweepConfig, load_config
from .pipeline import TEST, TRAIN, Observation, draw_trials, estimate_nmse, hpa_for, observe, run_trial
from .sweep import SweepResult, format_report, read_results, run_sweep, sweep_over
from .training import (
    TrainingSet,
    generate_training_set,
    load_training_set,
    save_training_set,
    train_networks,
)
