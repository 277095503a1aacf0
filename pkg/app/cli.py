"""Command-line experiment harness.

Every command writes a CSV whose first line records the package version,
the seed and the full invocation; re-running that invocation reproduces
the file byte for byte. Exit codes: 0 success, 2 invalid input, 3
infeasible constraint, 4 numerical failure.
"""

import logging
import shlex
import sys

import click

from app import __version__
from app.config import configure_logging, get_settings
from app.models import init_db
from app.selection.experiments import (
    BASELINE_HEADER,
    MAPPING_KINDS,
    SIMULATION_HEADER,
    parse_float_list,
    parse_int_range,
    parse_k_list,
    resolve_slots,
)
from app.selection.errors import SelectionError, ValidationError
from app.selection.scheme1 import optimize as optimize_scheme1
from app.selection.scheme2 import solve_constrained
from app.selection.tables import provenance_line, write_report, write_solution
from app.tools.results import error_type
from app.tools.scheme_tables import compute_scheme1, compute_scheme2, compute_table1, save_scheme_table
from app.tools.experiment_runs import run_baseline, run_simulation

logger = logging.getLogger(__name__)

EXIT_CODES = {
    "validation": 2,
    "infeasible": 3,
    "numerical": 4,
    "internal": 1
}


def _invocation(ctx: click.Context) -> str:
    """Command line that reproduces this run, options in declaration order."""
    parts = [ctx.command_path]
    for param in ctx.command.params:
        value = ctx.params.get(param.name)
        if value is None or value is False:
            continue
        flag = param.opts[0]
        if value is True:
            parts.append(flag)
        else:
            parts.extend([flag, shlex.quote(str(value))])
    return " ".join(parts)


def _fail(result: dict):
    """Report a failed tool result on stderr and exit with its code."""
    click.echo(f"error: {result.get('error')}", err=True)
    sys.exit(EXIT_CODES.get(result.get("error_type"), 1))


def _emit(ctx, header, rows, out, seed=None):
    with click.open_file(out or "-", "w", encoding="utf-8") as fh:
        write_report(header, rows, fh, provenance_line(__version__, seed, _invocation(ctx)))


def _single(ks, slots, etas=None):
    if len(ks) != 1 or len(slots.n_values) != 1 or (etas is not None and len(etas) != 1):
        raise ValidationError("--table and --record need a single k, N and eta", field="table")
    return ks[0], slots.n_values[0], (etas[0] if etas else None)


def _store_table(ctx, scheme, k_text, n, delta, tmax, eta_text, table, record):
    """Write and/or record the lookup table of a single (k, N, eta)."""
    if not table and not record:
        return
    try:
        slots = resolve_slots(n, delta, tmax)
        etas = parse_float_list(eta_text) if eta_text is not None else None
        k, n_slots, eta = _single(parse_k_list(k_text), slots, etas)
        if table:
            if scheme == "scheme1":
                solution = optimize_scheme1(k, n_slots, slots.delta)
            else:
                solution = solve_constrained(k, n_slots, slots.delta, eta)
            write_solution(solution, table, provenance_line(__version__, None, _invocation(ctx)))
    except SelectionError as e:
        _fail({"error": str(e), "error_type": error_type(e)})
    if record:
        init_db()
        result = save_scheme_table(scheme, k, n_slots, slots.delta, eta)
        if not result["success"]:
            _fail(result)


def slot_options(k_default=None):
    """--k, --n, --delta and --tmax shared by every experiment command."""
    def decorate(f):
        f = click.option("--tmax", type=float, help="Maximum selection time T_max in seconds (instead of --n).")(f)
        f = click.option("--delta", type=float, help="Vulnerability window in seconds (1 with --n).")(f)
        f = click.option("--n", "n", help="Slot count N, a range lo:hi or a list.")(f)
        f = click.option("--k", "k", default=k_default, required=k_default is None,
                         help="Node count, a list, or inf for the large-k limit.")(f)
        return f
    return decorate


@click.group()
@click.option("--log-level", default=None, help="Overrides LOG_LEVEL.")
def cli(log_level):
    """Optimal timer-based best-node selection experiments."""
    configure_logging(log_level.upper() if log_level else None)


@cli.command()
@slot_options(k_default="inf")
@click.option("--dist", help="Raw metric distribution; adds raw thresholds per interval.")
@click.option("--table", type=click.Path(dir_okay=False), help="Also write the j,alpha lookup table here.")
@click.option("--record", is_flag=True, help="Store the lookup table in the result database.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output CSV (stdout by default).")
@click.pass_context
def scheme1(ctx, k, n, delta, tmax, dist, table, record, out):
    """Maximum success probability mappings."""
    result = compute_scheme1(k=k, n=n, delta=delta, tmax=tmax, dist=dist)
    if not result["success"]:
        _fail(result)
    _emit(ctx, result["header"], [list(r.values()) for r in result["rows"]], out)
    _store_table(ctx, "scheme1", k, n, delta, tmax, None, table, record)


@cli.command()
@slot_options(k_default="inf")
@click.option("--eta", required=True, help="Success constraint, a list or lo:hi:step.")
@click.option("--table", type=click.Path(dir_okay=False), help="Also write the j,alpha lookup table here.")
@click.option("--record", is_flag=True, help="Store the lookup table in the result database.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output CSV (stdout by default).")
@click.pass_context
def scheme2(ctx, k, n, delta, tmax, eta, table, record, out):
    """Minimum expected selection time subject to P >= eta."""
    result = compute_scheme2(k=k, n=n, eta=eta, delta=delta, tmax=tmax)
    if "rows" not in result:
        _fail(result)
    _emit(ctx, result["header"], [list(r.values()) for r in result["rows"]], out)
    if not result["success"]:
        _fail(result)
    _store_table(ctx, "scheme2", k, n, delta, tmax, eta, table, record)


@cli.command()
@click.option("--eta", help="Success constraints (default 0.75,0.85,0.9,0.98).")
@click.option("--feedback", is_flag=True, help="Add the sink's feedback overhead.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output CSV (stdout by default).")
@click.pass_context
def table1(ctx, eta, feedback, out):
    """Large-k timer scheme against the published splitting figures."""
    result = compute_table1(eta=eta, feedback=feedback)
    if not result["success"]:
        _fail(result)
    _emit(ctx, result["header"], [list(r.values()) for r in result["rows"]], out)


@cli.command()
@slot_options()
@click.option("--scheme", type=click.Choice(MAPPING_KINDS), default="scheme1", show_default=True,
              help="Mapping to simulate.")
@click.option("--mapping", type=click.Path(dir_okay=False), help="Lookup table CSV to simulate instead.")
@click.option("--eta", type=float, help="Constraint for the scheme2 mapping.")
@click.option("--c", "c", type=float, help="Constant of the inverse rule or slope of the linear rule.")
@click.option("--dist", default="uniform", show_default=True, help="Raw metric distribution.")
@click.option("--discretize", is_flag=True, help="Floor a continuous mapping onto the slot grid.")
@click.option("--trials", type=click.IntRange(min=1), default=lambda: get_settings().sim_trials,
              help="Contention rounds (SIM_TRIALS).")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--time-convention", type=click.Choice(["nslots", "tmax"]), default="nslots", show_default=True)
@click.option("--trace", type=click.Path(dir_okay=False), help="Per-trial CSV.")
@click.option("--record", is_flag=True, help="Store the run in the result database.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output CSV (stdout by default).")
@click.pass_context
def simulate(ctx, k, n, delta, tmax, scheme, mapping, eta, c, dist, discretize, trials, seed,
             time_convention, trace, record, out):
    """Monte Carlo estimate of a mapping's success probability and selection time."""
    if record:
        init_db()
    result = run_simulation(
        k=k, n=n, delta=delta, tmax=tmax,
        mapping=scheme, mapping_path=mapping, eta=eta, c=c, dist=dist, discretize=discretize,
        trials=trials, seed=seed, time_convention=time_convention, trace=trace, record=record
    )
    if not result["success"]:
        _fail(result)
    _emit(ctx, SIMULATION_HEADER, [[result["result"][h] for h in SIMULATION_HEADER]], out, seed)


@cli.command()
@slot_options()
@click.option("--dist", default="uniform", show_default=True, help="Raw metric distribution.")
@click.option("--objective", type=click.Choice(["success", "time"]), default="success", show_default=True)
@click.option("--eta", type=float, help="Constraint for the time objective.")
@click.option("--budget", type=click.IntRange(min=3), default=lambda: get_settings().baseline_budget,
              help="Objective evaluations per search (BASELINE_BUDGET).")
@click.option("--trials", type=click.IntRange(min=1000), default=lambda: get_settings().baseline_trials,
              help="Trials per evaluation (BASELINE_TRIALS).")
@click.option("--final-trials", type=click.IntRange(min=1),
              default=lambda: get_settings().baseline_final_trials,
              help="Trials for the reported estimate (BASELINE_FINAL_TRIALS).")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--time-convention", type=click.Choice(["nslots", "tmax"]), default="nslots", show_default=True)
@click.option("--record", is_flag=True, help="Store the run in the result database.")
@click.option("--out", type=click.Path(dir_okay=False), help="Output CSV (stdout by default).")
@click.pass_context
def baseline(ctx, k, n, delta, tmax, dist, objective, eta, budget, trials, final_trials, seed,
             time_convention, record, out):
    """Tune the inverse-metric rule c / mu and compare it with the optimal scheme.

    --n may be a range; each N is searched separately with the same seed.
    """
    if record:
        init_db()
    try:
        n_values = [None] if n is None else parse_int_range(n)
    except ValidationError as e:
        _fail({"error": str(e), "error_type": "validation"})
    rows = []
    for n_slots in n_values:
        result = run_baseline(
            k=k, n=None if n_slots is None else str(n_slots), delta=delta, tmax=tmax, dist=dist,
            objective=objective, eta=eta, budget=budget, trials=trials, final_trials=final_trials,
            seed=seed, time_convention=time_convention, record=record
        )
        if not result["success"]:
            _fail(result)
        rows.append([result["result"][h] for h in BASELINE_HEADER])
    _emit(ctx, BASELINE_HEADER, rows, out, seed)


def main():
    cli(prog_name="python -m app")
