"""Monte-Carlo robustness campaign: seeded random initial attitudes.

Each run draws three Euler angles uniformly from ±range, composes them
Z-Y-X into the initial attitude, and reruns the tracking task with the
per-axis exponential start of the reference curve taken from the actual
initial error (|q_evi(0)|, floored for degenerate axes). Per-run seeds are
derived from (master seed, run index) with a SplitMix64 step so results
are independent of execution order and parallelism degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from multiprocessing import get_context
from typing import Optional

import numpy as np

from . import quat
from .attitude import UnitQuaternion
from .config import CampaignSettings, ScenarioConfig
from .engine import RunMetrics, SimConfig, run_scenario
from .errors import SappcLabError

EULER_CONVENTION = "ZYX"   # yaw-pitch-roll, recorded in output metadata


def splitmix64(seed):
    """One SplitMix64 output; the usual seed-derivation building block."""
    z = (seed + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def run_seed(master_seed, index):
    return splitmix64((master_seed & 0xFFFFFFFFFFFFFFFF) + index)


def sample_initial_attitude(seed, range_deg=85.0) -> UnitQuaternion:
    """Uniform Euler angles on ±range_deg composed Z-Y-X."""
    rng = np.random.default_rng(seed)
    angles = rng.uniform(-range_deg, range_deg, size=3)
    yaw, pitch, roll = (math.radians(a) for a in angles)
    w, x, y, z = quat.q_from_euler_zyx(yaw, pitch, roll)
    return UnitQuaternion(w, np.array([x, y, z]))


@dataclass
class CampaignRunResult:
    index: int
    seed: int
    metrics: Optional[RunMetrics]
    error: str = ""

    @property
    def failed(self):
        return self.metrics is None


@dataclass
class CampaignStats:
    results: list
    deviation_max: float = field(init=False)
    deviation_mean: float = field(init=False)
    deviation_p99: float = field(init=False)
    terminal_max: float = field(init=False)
    terminal_mean: float = field(init=False)
    terminal_p99: float = field(init=False)
    failure_count: int = field(init=False)

    def __post_init__(self):
        devs = [r.metrics.rpf_deviation_at_t2 for r in self.results
                if r.metrics is not None]
        terms = [r.metrics.terminal_error for r in self.results
                 if r.metrics is not None]
        self.failure_count = sum(1 for r in self.results if r.failed)
        if devs:
            self.deviation_max = float(np.max(devs))
            self.deviation_mean = float(np.mean(devs))
            self.deviation_p99 = float(np.percentile(devs, 99))
            self.terminal_max = float(np.max(terms))
            self.terminal_mean = float(np.mean(terms))
            self.terminal_p99 = float(np.percentile(terms, 99))
        else:
            self.deviation_max = self.deviation_mean = math.nan
            self.deviation_p99 = math.nan
            self.terminal_max = self.terminal_mean = math.nan
            self.terminal_p99 = math.nan

    def summary_dict(self):
        return {
            "n_runs": len(self.results),
            "failure_count": self.failure_count,
            "euler_convention": EULER_CONVENTION,
            "rpf_deviation_at_t2": {
                "max": self.deviation_max,
                "mean": self.deviation_mean,
                "p99": self.deviation_p99,
            },
            "terminal_error": {
                "max": self.terminal_max,
                "mean": self.terminal_mean,
                "p99": self.terminal_p99,
            },
        }


def _single_run(cfg: ScenarioConfig, index, trajectory_dir=None):
    settings = cfg.campaign
    seed = run_seed(settings.master_seed, index)
    q_s0 = sample_initial_attitude(seed, settings.euler_range_deg)
    scen = replace(cfg.scenario, q_s0=q_s0, rpf_rho_e0="initial-error")
    sim = SimConfig(
        dt=cfg.sim.dt,
        duration=cfg.sim.duration,
        scenario="custom",
        controller=cfg.sim.controller,
        seed=seed,
    )
    try:
        log, metrics = run_scenario(sim, scen)
    except SappcLabError as exc:
        return CampaignRunResult(index, seed, None,
                                 f"{type(exc).__name__}: {exc}")
    if trajectory_dir is not None:
        log.to_csv(f"{trajectory_dir}/run_{index:04d}.csv")
    return CampaignRunResult(index, seed, metrics)


_POOL_CFG = {}


def _pool_init(cfg, trajectory_dir):
    _POOL_CFG["cfg"] = cfg
    _POOL_CFG["dir"] = trajectory_dir


def _pool_run(index):
    return _single_run(_POOL_CFG["cfg"], index, _POOL_CFG["dir"])


def run_campaign(cfg: ScenarioConfig, parallelism=None,
                 trajectory_dir=None) -> CampaignStats:
    """Execute the seeded batch; deterministic for a fixed master seed."""
    settings: CampaignSettings = cfg.campaign
    n = settings.n_runs
    workers = parallelism if parallelism is not None else settings.parallelism
    workers = max(1, min(workers, n))
    if trajectory_dir is not None and not settings.save_trajectories:
        trajectory_dir = None
    if workers == 1:
        results = [_single_run(cfg, i, trajectory_dir) for i in range(n)]
    else:
        ctx = get_context("fork")
        with ctx.Pool(workers, initializer=_pool_init,
                      initargs=(cfg, trajectory_dir)) as pool:
            results = pool.map(_pool_run, range(n))
    results.sort(key=lambda r: r.index)
    return CampaignStats(results)
