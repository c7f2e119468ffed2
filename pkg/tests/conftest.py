import pytest

from sappc_lab.cli import bundled_config_path
from sappc_lab.config import load_config
from sappc_lab.engine import run_scenario


@pytest.fixture(scope="session")
def nominal_run():
    """One full bundled-nominal simulation shared across test modules."""
    import time
    cfg = load_config(bundled_config_path("nominal"))
    start = time.perf_counter()
    log, metrics = run_scenario(cfg.sim, cfg.scenario)
    wall = time.perf_counter() - start
    return cfg, log, metrics, wall
