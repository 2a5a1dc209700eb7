"""Experiment orchestration, reporting and the command line interface."""

from .experiments import (DEFAULT_BUDGETS, ExperimentConfig, moment_triples, run_clt,
                          run_cumulant_sweep, run_kendall, run_ldp, run_lower_tail,
                          run_moment_check, run_modphi, run_tessellation_check, run_upper_tail,
                          upper_tail_limit)
from .report import SCHEMA_VERSION, ExperimentReport, Verdict

__all__ = [
    "DEFAULT_BUDGETS", "ExperimentConfig", "ExperimentReport", "SCHEMA_VERSION", "Verdict",
    "moment_triples", "run_clt", "run_cumulant_sweep", "run_kendall", "run_ldp", "run_lower_tail",
    "run_moment_check", "run_modphi", "run_tessellation_check", "run_upper_tail", "upper_tail_limit",
]
