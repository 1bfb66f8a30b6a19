"""Delay-differential model of T-cell clonal expansion."""

from ._core import (
    IntegrationError,
    InvalidArgument,
    Scenario,
    Simulation,
    UndefinedObservable,
    antigen_supply_rate,
    default_params,
    fit,
    fittable_params,
    naive_supply_rate,
    profile_mode,
    profile_support,
    proliferation_rate,
    recruitment_regression,
    run_cli,
    scenario,
    scenario_from_config,
    simulate,
    synthesize_dataset,
)

__all__ = [
    "IntegrationError",
    "InvalidArgument",
    "Scenario",
    "Simulation",
    "UndefinedObservable",
    "antigen_supply_rate",
    "default_params",
    "fit",
    "fittable_params",
    "naive_supply_rate",
    "profile_mode",
    "profile_support",
    "proliferation_rate",
    "recruitment_regression",
    "run_cli",
    "scenario",
    "scenario_from_config",
    "simulate",
    "synthesize_dataset",
]
