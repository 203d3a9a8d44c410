import functools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from otcut.io import load_config
from otcut.mesh import SurfaceMesh
from otcut.pipeline import run_from_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
DATA = Path(__file__).parent / "data"

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# criterion lines collected by test_acceptance and echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def shipped_configs():
    return sorted(p.stem for p in CONFIGS.glob("*.toml"))


@functools.lru_cache(maxsize=None)
def config_run(name: str, refine: int = 0):
    """Solve a shipped config once per session; later callers share the result."""
    cfg = load_config(CONFIGS / f"{name}.toml", {"refine": refine or None})
    return cfg, run_from_config(cfg)


@pytest.fixture
def tetra() -> SurfaceMesh:
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    f = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
    return SurfaceMesh(v, f)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
