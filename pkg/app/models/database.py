"""Database models for stored selection experiments."""

from sqlalchemy import create_engine, Column, Integer, String, Float, Text, DateTime
from sqlalchemy.orm import declarative_base, sessionmaker
from datetime import datetime
import os

from app.config import get_settings

DATABASE_URL = get_settings().database_url

if DATABASE_URL.startswith("sqlite:///") and not DATABASE_URL.startswith("sqlite:///:memory:"):
    os.makedirs(os.path.dirname(DATABASE_URL[len("sqlite:///"):]) or ".", exist_ok=True)

engine = create_engine(DATABASE_URL, echo=False)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
Base = declarative_base()


class SchemeTable(Base):
    """A computed optimal mapping (Scheme 1 or Scheme 2 lookup table)."""
    __tablename__ = "scheme_tables"

    id = Column(Integer, primary_key=True, index=True)
    scheme = Column(String(20), nullable=False)  # scheme1, scheme2
    k = Column(Integer)  # NULL = large-k limit
    n_slots = Column(Integer, nullable=False)
    delta = Column(Float, nullable=False)
    eta = Column(Float)
    lambda_star = Column(Float)
    p_success = Column(Float)
    expected_time = Column(Float)
    csv_text = Column(Text)  # full lookup table in the CSV table format
    file_path = Column(String(500))
    created_at = Column(DateTime, default=datetime.utcnow)

    def to_dict(self):
        return {
            "id": self.id,
            "scheme": self.scheme,
            "k": self.k if self.k is not None else "inf",
            "n_slots": self.n_slots,
            "delta": self.delta,
            "eta": self.eta,
            "lambda_star": self.lambda_star,
            "p_success": self.p_success,
            "expected_time": self.expected_time,
            "file_path": self.file_path,
            "created_at": self.created_at.isoformat() if self.created_at else None
        }


class SimulationRun(Base):
    """Monte Carlo estimate for one mapping."""
    __tablename__ = "simulation_runs"

    id = Column(Integer, primary_key=True, index=True)
    mapping_label = Column(String(100))  # scheme1, scheme2, inverse, file name
    k = Column(Integer, nullable=False)
    n_slots = Column(Integer, nullable=False)
    delta = Column(Float, nullable=False)
    t_max = Column(Float, nullable=False)
    trials = Column(Integer, nullable=False)
    seed = Column(String(24), nullable=False)  # u64 does not fit a signed column
    time_convention = Column(String(20))
    success_prob = Column(Float)
    success_stderr = Column(Float)
    mean_time = Column(Float)
    time_stderr = Column(Float)
    analytic_success = Column(Float)
    analytic_time = Column(Float)
    created_at = Column(DateTime, default=datetime.utcnow)

    def to_dict(self):
        return {
            "id": self.id,
            "mapping": self.mapping_label,
            "k": self.k,
            "n_slots": self.n_slots,
            "delta": self.delta,
            "t_max": self.t_max,
            "trials": self.trials,
            "seed": int(self.seed),
            "time_convention": self.time_convention,
            "success_prob": self.success_prob,
            "success_stderr": self.success_stderr,
            "mean_time": self.mean_time,
            "time_stderr": self.time_stderr,
            "analytic_success": self.analytic_success,
            "analytic_time": self.analytic_time,
            "created_at": self.created_at.isoformat() if self.created_at else None
        }


class BaselineRun(Base):
    """Optimized inverse-metric mapping compared against the optimal scheme."""
    __tablename__ = "baseline_runs"

    id = Column(Integer, primary_key=True, index=True)
    distribution = Column(String(255))
    objective = Column(String(20))  # success, time
    eta = Column(Float)
    k = Column(Integer, nullable=False)
    n_slots = Column(Integer, nullable=False)
    c_star = Column(Float)
    value = Column(Float)
    stderr = Column(Float)
    optimal_value = Column(Float)
    ratio = Column(Float)
    seed = Column(String(24))
    search_path = Column(String(50))
    created_at = Column(DateTime, default=datetime.utcnow)

    def to_dict(self):
        return {
            "id": self.id,
            "distribution": self.distribution,
            "objective": self.objective,
            "eta": self.eta,
            "k": self.k,
            "n_slots": self.n_slots,
            "c_star": self.c_star,
            "value": self.value,
            "stderr": self.stderr,
            "optimal_value": self.optimal_value,
            "ratio": self.ratio,
            "seed": int(self.seed) if self.seed is not None else None,
            "search_path": self.search_path,
            "created_at": self.created_at.isoformat() if self.created_at else None
        }


def init_db():
    """Initialize the database tables."""
    Base.metadata.create_all(bind=engine)
