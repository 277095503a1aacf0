"""Tools for computing, running and storing timer selection experiments."""

from app.tools.scheme_tables import (
    compute_scheme1,
    compute_scheme2,
    compute_table1,
    save_scheme_table,
    get_scheme_tables
)
from app.tools.experiment_runs import (
    run_simulation,
    run_baseline,
    list_runs
)

__all__ = [
    # Scheme tables
    "compute_scheme1",
    "compute_scheme2",
    "compute_table1",
    "save_scheme_table",
    "get_scheme_tables",
    # Experiment runs
    "run_simulation",
    "run_baseline",
    "list_runs"
]
