"""Environment-driven settings."""

import logging
import os
from dataclasses import dataclass

from dotenv import load_dotenv

from app.selection.errors import ValidationError

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"environment variable {name} must be an integer, got {raw!r}", field=name) from None


@dataclass(frozen=True)
class Settings:
    database_url: str
    results_dir: str
    sim_workers: int
    sim_trials: int
    baseline_budget: int
    baseline_trials: int
    baseline_final_trials: int
    log_level: str


def get_settings() -> Settings:
    return Settings(
        database_url=os.getenv("DATABASE_URL", "sqlite:///data/timer_selection.db"),
        results_dir=os.getenv("RESULTS_DIR", "data/results"),
        sim_workers=max(1, _int_env("SIM_WORKERS", 1)),
        sim_trials=_int_env("SIM_TRIALS", 100_000),
        baseline_budget=_int_env("BASELINE_BUDGET", 60),
        baseline_trials=_int_env("BASELINE_TRIALS", 100_000),
        baseline_final_trials=_int_env("BASELINE_FINAL_TRIALS", 1_000_000),
        log_level=os.getenv("LOG_LEVEL", "INFO").upper(),
    )


def configure_logging(level: str | None = None) -> None:
    """Install one stream handler on the root logger (idempotent)."""
    level = level or get_settings().log_level
    root = logging.getLogger()
    if not any(getattr(h, "_timer_selection", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._timer_selection = True
        root.addHandler(handler)
    root.setLevel(level)
