"""Scheme Tables Tool - Compute, save and look up optimal timer mappings."""

import logging
import os
from typing import Optional

from app.models.database import SessionLocal, SchemeTable
from app.selection.experiments import (
    TABLE1_ETAS,
    parse_float_list,
    parse_k_list,
    resolve_slots,
    scheme1_report,
    scheme2_report,
    table1_report,
)
from app.selection.errors import ValidationError
from app.selection.model import parse_distribution
from app.selection.scheme1 import optimize as optimize_scheme1
from app.selection.scheme2 import solve_constrained
from app.selection.tables import solution_to_csv
from app.tools.results import failure, results_dir

logger = logging.getLogger(__name__)


def compute_scheme1(
    k: str = "inf",
    n: Optional[str] = None,
    delta: Optional[float] = None,
    tmax: Optional[float] = None,
    dist: Optional[str] = None
) -> dict:
    """
    Maximum-success mappings for every k and N requested.

    Args:
        k: Node counts, e.g. "5" or "2,5,inf"
        n: Slot counts, e.g. "10" or "0:50"
        delta: Vulnerability window in seconds (defaults to 1 with n)
        tmax: Maximum selection time in seconds (instead of n)
        dist: Raw metric distribution for threshold output

    Returns:
        Dictionary with one row per interval.
    """
    try:
        slots = resolve_slots(n, delta, tmax)
        distribution = parse_distribution(dist) if dist else None
        report = scheme1_report(parse_k_list(k), slots, distribution)
        return {
            "success": True,
            "header": report.header,
            "rows": report.as_dicts()
        }
    except Exception as e:
        return failure(e)


def compute_scheme2(
    k: str = "inf",
    n: Optional[str] = None,
    eta: str = "0.9",
    delta: Optional[float] = None,
    tmax: Optional[float] = None
) -> dict:
    """
    Minimum expected selection time under success constraints.

    Args:
        k: Node counts, e.g. "5" or "inf"
        n: Slot counts
        eta: Constraints, e.g. "0.6,0.87" or "0.5:0.9:0.05"
        delta: Vulnerability window in seconds
        tmax: Maximum selection time in seconds (instead of n)

    Returns:
        Dictionary with one row per (k, N, eta); infeasible rows are marked.
    """
    try:
        slots = resolve_slots(n, delta, tmax)
        report = scheme2_report(parse_k_list(k), slots, parse_float_list(eta))
        return {
            "success": report.status == "ok",
            "status": report.status,
            "header": report.header,
            "rows": report.as_dicts(),
            **({"error": "every requested eta is infeasible", "error_type": "infeasible"}
               if report.status != "ok" else {})
        }
    except Exception as e:
        return failure(e)


def compute_table1(eta: Optional[str] = None, feedback: bool = False) -> dict:
    """
    Large-k timer scheme against the published splitting figures (802.11 timing).

    Args:
        eta: Constraints; defaults to 0.75, 0.85, 0.90, 0.98
        feedback: Add the sink's feedback overhead to the selection time

    Returns:
        Dictionary with one row per (T_max, eta).
    """
    try:
        etas = parse_float_list(eta) if eta else TABLE1_ETAS
        report = table1_report(etas=etas, feedback=feedback)
        return {
            "success": True,
            "header": report.header,
            "rows": report.as_dicts()
        }
    except Exception as e:
        return failure(e)


def save_scheme_table(
    scheme: str,
    k: Optional[int],
    n_slots: int,
    delta: float = 1.0,
    eta: Optional[float] = None
) -> dict:
    """
    Compute one lookup table and store it in the database and as a CSV file.

    Args:
        scheme: "scheme1" or "scheme2"
        k: Number of nodes, None for the large-k limit
        n_slots: Number of slots N
        delta: Vulnerability window in seconds
        eta: Success constraint (scheme2 only)

    Returns:
        Dictionary with the stored table.
    """
    db = SessionLocal()
    try:
        if scheme == "scheme1":
            solution = optimize_scheme1(k, n_slots, delta)
            p_success, expected_time, lambda_star = solution.p_star, None, None
        elif scheme == "scheme2":
            if eta is None:
                raise ValidationError("scheme2 tables need eta", field="eta")
            solution = solve_constrained(k, n_slots, delta, eta)
            p_success, expected_time, lambda_star = (
                solution.p_success, solution.expected_time, solution.lambda_star)
        else:
            raise ValidationError(f"unknown scheme {scheme!r}", field="scheme")

        csv_text = solution_to_csv(solution)
        label = "inf" if k is None else str(k)
        filename = f"{scheme}_k{label}_n{n_slots}" + (f"_eta{eta:g}" if eta is not None else "") + ".csv"
        filepath = os.path.join(results_dir(), filename)
        with open(filepath, "w", encoding="utf-8", newline="") as f:
            f.write(csv_text)

        table = SchemeTable(
            scheme=scheme,
            k=k,
            n_slots=n_slots,
            delta=delta,
            eta=eta,
            lambda_star=lambda_star,
            p_success=p_success,
            expected_time=expected_time,
            csv_text=csv_text,
            file_path=filepath
        )
        db.add(table)
        db.commit()
        db.refresh(table)
        logger.info("stored %s table id=%d at %s", scheme, table.id, filepath)

        return {
            "success": True,
            "message": f"Saved {scheme} table to {filepath}",
            "table": table.to_dict(),
            "lengths": list(solution.lengths)
        }
    except Exception as e:
        db.rollback()
        return failure(e)
    finally:
        db.close()


def get_scheme_tables(scheme: Optional[str] = None, limit: int = 50) -> dict:
    """
    List stored lookup tables, newest first.

    Args:
        scheme: Filter by scheme1 or scheme2
        limit: Maximum number of results
    """
    db = SessionLocal()
    try:
        query = db.query(SchemeTable)
        if scheme:
            query = query.filter(SchemeTable.scheme == scheme)
        tables = query.order_by(SchemeTable.id.desc()).limit(limit).all()
        return {
            "success": True,
            "total": len(tables),
            "tables": [t.to_dict() for t in tables]
        }
    except Exception as e:
        return failure(e)
    finally:
        db.close()
