"""Experiment runner: plans, Monte Carlo simulation, noise fits, reports and the CLI."""

from .fitnoise import NoiseFit, fit_noise
from .plan import ExperimentPlan, PlanError
from .simulate import SimulatedDisturbance, simulate_disturbance, simulate_ndc_set
from .stats import CountRecord, estimate_with_error, sample_counts, significance

__all__ = [
    "CountRecord",
    "ExperimentPlan",
    "NoiseFit",
    "PlanError",
    "SimulatedDisturbance",
    "estimate_with_error",
    "fit_noise",
    "sample_counts",
    "significance",
    "simulate_disturbance",
    "simulate_ndc_set",
]
