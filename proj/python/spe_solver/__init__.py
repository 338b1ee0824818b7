"""Splitting-up scheme solver for the 2D stochastic primitive equations."""

from ._spe import (
    BlowUpError,
    ConfigError,
    Field,
    Grid,
    apply_A,
    config_hash,
    eval_field,
    nonlinear_B,
    project_H,
    simulate_norms,
    study_json,
    trilinear_b,
)

__all__ = [
    "BlowUpError",
    "ConfigError",
    "Field",
    "Grid",
    "apply_A",
    "config_hash",
    "eval_field",
    "nonlinear_B",
    "project_H",
    "simulate_norms",
    "study_json",
    "trilinear_b",
]
