"""Database models."""

from app.models.database import (
    Base,
    SchemeTable,
    SimulationRun,
    BaselineRun,
    init_db,
    SessionLocal
)

__all__ = [
    "Base",
    "SchemeTable",
    "SimulationRun",
    "BaselineRun",
    "init_db",
    "SessionLocal"
]
