"""Shared helpers for tool responses and result files."""

import logging
import os

from app.config import get_settings
from app.selection.errors import ConstraintUnmeetable, Infeasible, NumericalFailure, ValidationError

logger = logging.getLogger(__name__)


def error_type(e: Exception) -> str:
    if isinstance(e, ValidationError):
        return "validation"
    if isinstance(e, (Infeasible, ConstraintUnmeetable)):
        return "infeasible"
    if isinstance(e, NumericalFailure):
        return "numerical"
    return "internal"


def failure(e: Exception) -> dict:
    """Tool response for a caught exception."""
    kind = error_type(e)
    if kind == "internal":
        logger.exception("unexpected tool failure")
    response = {
        "success": False,
        "error": str(e),
        "error_type": kind
    }
    field = getattr(e, "field", None)
    if field:
        response["field"] = field
    return response


def results_dir() -> str:
    """Ensure the results directory exists."""
    path = get_settings().results_dir
    os.makedirs(path, exist_ok=True)
    return path
