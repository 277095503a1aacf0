"""Shared fixtures: in-memory result store, Flask client and CLI runner."""

import os

# must be set before app.models creates its engine
os.environ["DATABASE_URL"] = "sqlite://"
os.environ.setdefault("LOG_LEVEL", "WARNING")

import numpy as np
import pytest
from click.testing import CliRunner

from app import create_app
from app.config import configure_logging
from app.models import init_db
from app.selection.model import DiscreteMapping, SelectionParams

configure_logging("WARNING")


@pytest.fixture(autouse=True)
def results_dir(tmp_path, monkeypatch):
    path = tmp_path / "results"
    monkeypatch.setenv("RESULTS_DIR", str(path))
    return path


@pytest.fixture
def app():
    app = create_app()
    app.config["TESTING"] = True
    init_db()
    return app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


def make_mapping(alphas, k, delta=1.0):
    """Discrete mapping with N = len(alphas) - 1 and T_max = N * delta."""
    params = SelectionParams.from_slots(k, len(alphas) - 1, delta)
    return DiscreteMapping(params, tuple(alphas))


def _integer_simplex(dims, budget):
    """Integer points with non-negative entries summing to at most ``budget``, in column chunks."""
    if dims == 1:
        yield np.arange(budget + 1)[None, :]
        return
    if dims == 2:
        a, b = np.meshgrid(np.arange(budget + 1), np.arange(budget + 1), indexing="ij")
        keep = a + b <= budget
        yield np.stack([a[keep], b[keep]])
        return
    for first in range(budget + 1):
        for rest in _integer_simplex(dims - 1, budget - first):
            yield np.vstack([np.full((1, rest.shape[1]), first), rest])


def simplex_grid(dims, step):
    """Interval lengths on a grid of spacing ``step`` with total at most 1, in chunks."""
    steps = round(1 / step)
    for chunk in _integer_simplex(dims, steps):
        yield chunk / steps
