"""Experiment Runs Tool - Monte Carlo simulations and inverse-metric baselines."""

import logging
from typing import Optional

from app.config import get_settings
from app.models.database import SessionLocal, SimulationRun, BaselineRun
from app.selection.baselines import BaselineConfig
from app.selection.experiments import (
    baseline_report,
    build_mapping,
    parse_k_list,
    parse_objective,
    parse_time_convention,
    resolve_slots,
    simulation_report,
    single_params,
)
from app.selection.model import parse_distribution
from app.selection.simulator import estimate
from app.tools.results import failure

logger = logging.getLogger(__name__)


def run_simulation(
    k: str,
    n: Optional[str] = None,
    delta: Optional[float] = None,
    tmax: Optional[float] = None,
    mapping: str = "scheme1",
    mapping_path: Optional[str] = None,
    eta: Optional[float] = None,
    c: Optional[float] = None,
    dist: str = "uniform",
    discretize: bool = False,
    trials: Optional[int] = None,
    seed: int = 0,
    time_convention: str = "nslots",
    trace: Optional[str] = None,
    record: bool = True
) -> dict:
    """
    Estimate success probability and selection time of a mapping by simulation.

    Args:
        k: Number of nodes
        n: Number of slots (or give delta and tmax)
        delta: Vulnerability window in seconds
        tmax: Maximum selection time in seconds
        mapping: scheme1, scheme2, inverse or linear
        mapping_path: CSV lookup table to simulate instead
        eta: Success constraint for scheme2
        c: Constant of the inverse rule, slope of the linear rule
        dist: Raw metric distribution of the inverse rule
        discretize: Floor a continuous mapping onto the slot grid
        trials: Number of contention rounds (SIM_TRIALS by default)
        seed: Random seed
        time_convention: nslots or tmax
        trace: Write per-trial outcomes to this CSV path
        record: Store the run in the database

    Returns:
        Dictionary with estimates, closed-form values and z-scores.
    """
    settings = get_settings()
    db = SessionLocal()
    try:
        params = single_params(parse_k_list(k), resolve_slots(n, delta, tmax))
        label, built = build_mapping(
            mapping, params,
            mapping_path=mapping_path,
            eta=eta,
            c=c,
            distribution=parse_distribution(dist),
            discretize=discretize
        )
        stats = estimate(
            built, params,
            trials=settings.sim_trials if trials is None else int(trials),
            seed=int(seed),
            convention=parse_time_convention(time_convention),
            workers=settings.sim_workers,
            trace=trace
        )
        row = simulation_report(label, built, params, stats).as_dicts()[0]

        response = {
            "success": True,
            "result": row
        }
        if record:
            run = SimulationRun(
                mapping_label=label,
                k=params.k,
                n_slots=params.n_slots,
                delta=params.delta,
                t_max=params.t_max,
                trials=stats.trials,
                seed=str(stats.seed),
                time_convention=stats.time_convention.value,
                success_prob=stats.success_prob,
                success_stderr=stats.success_stderr,
                mean_time=stats.mean_selection_time,
                time_stderr=stats.time_stderr,
                analytic_success=row["analytic_success"],
                analytic_time=row["analytic_time"]
            )
            db.add(run)
            db.commit()
            db.refresh(run)
            logger.info("stored simulation run id=%d (%s)", run.id, label)
            response["run"] = run.to_dict()
        return response
    except Exception as e:
        db.rollback()
        return failure(e)
    finally:
        db.close()


def run_baseline(
    k: str,
    n: Optional[str] = None,
    delta: Optional[float] = None,
    tmax: Optional[float] = None,
    dist: str = "uniform",
    objective: str = "success",
    eta: Optional[float] = None,
    budget: Optional[int] = None,
    trials: Optional[int] = None,
    final_trials: Optional[int] = None,
    seed: int = 0,
    time_convention: str = "nslots",
    record: bool = True
) -> dict:
    """
    Tune the inverse-metric rule c / mu and compare it with the optimal scheme.

    Args:
        k: Number of nodes
        n: Number of slots (or give delta and tmax)
        dist: Raw metric distribution
        objective: success (maximize P) or time (minimize time at P >= eta)
        eta: Success constraint for the time objective
        budget: Objective evaluations per search
        trials: Trials per evaluation
        final_trials: Trials for the reported estimate
        seed: Random seed shared by every evaluation

    Returns:
        Dictionary with c*, the achieved value and its ratio to the optimum.
    """
    settings = get_settings()
    db = SessionLocal()
    try:
        params = single_params(parse_k_list(k), resolve_slots(n, delta, tmax))
        config = BaselineConfig(
            distribution=parse_distribution(dist),
            objective=parse_objective(objective),
            eta=eta,
            search_budget=settings.baseline_budget if budget is None else int(budget),
            trials_per_eval=settings.baseline_trials if trials is None else int(trials),
            final_trials=settings.baseline_final_trials if final_trials is None else int(final_trials),
            seed=int(seed),
            convention=parse_time_convention(time_convention),
            workers=settings.sim_workers
        )
        row = baseline_report(config, params).as_dicts()[0]

        response = {
            "success": True,
            "result": row
        }
        if record:
            run = BaselineRun(
                distribution=row["distribution"],
                objective=row["objective"],
                eta=eta,
                k=params.k,
                n_slots=params.n_slots,
                c_star=row["c_star"],
                value=row["value"],
                stderr=row["stderr"],
                optimal_value=row["optimal_value"],
                ratio=row["ratio"],
                seed=str(config.seed),
                search_path=row["search_path"]
            )
            db.add(run)
            db.commit()
            db.refresh(run)
            logger.info("stored baseline run id=%d (%s)", run.id, row["distribution"])
            response["run"] = run.to_dict()
        return response
    except Exception as e:
        db.rollback()
        return failure(e)
    finally:
        db.close()


def list_runs(kind: Optional[str] = None, limit: int = 50) -> dict:
    """
    List stored runs, newest first.

    Args:
        kind: "simulation", "baseline" or None for both
        limit: Maximum number of results per kind
    """
    db = SessionLocal()
    try:
        response = {"success": True}
        if kind in (None, "simulation"):
            runs = db.query(SimulationRun).order_by(SimulationRun.id.desc()).limit(limit).all()
            response["simulations"] = [r.to_dict() for r in runs]
        if kind in (None, "baseline"):
            runs = db.query(BaselineRun).order_by(BaselineRun.id.desc()).limit(limit).all()
            response["baselines"] = [r.to_dict() for r in runs]
        if len(response) == 1:
            return {
                "success": False,
                "error": f"unknown run kind {kind!r}",
                "error_type": "validation"
            }
        return response
    except Exception as e:
        return failure(e)
    finally:
        db.close()
