"""Reference oracle and experiment suites."""

from .experiments import (
    EXPECTATIONS,
    ExperimentResult,
    ExperimentSpec,
    load_suite,
    parse_suite,
    run_experiment,
    run_suite,
    write_report,
)
from .oracle import ORACLE_FIELDS, oracle_process

__all__ = [
    "EXPECTATIONS",
    "ExperimentResult",
    "ExperimentSpec",
    "ORACLE_FIELDS",
    "load_suite",
    "oracle_process",
    "parse_suite",
    "run_experiment",
    "run_suite",
    "write_report",
]
