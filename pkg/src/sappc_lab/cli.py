"""Command-line entry point.

Subcommands
-----------
run       single scenario -> trajectory CSV + metrics CSV + metadata
compare   three controllers on the shared scenario -> three CSVs + summary
pulse     singularity test (sappc vs blfppc under the pulse disturbance)
campaign  Monte-Carlo batch -> per-run metrics CSV + stats summary
check     property/oracle suites; exit 0 iff all pass

Exit codes: 0 success, 1 configuration/validation failure, 2 runtime abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import run_campaign
from .checks import run_all_checks
from .config import load_config
from .engine import LOG_COLUMNS, run_scenario
from .errors import ParseError, SappcLabError, ValidationError

METRIC_FIELDS = ("settling_error", "terminal_error", "rpf_deviation_at_t2",
                 "containment_fraction", "recovered_after_pulse", "overshoot")


def bundled_config_path(name):
    """Path of a config shipped inside the package (nominal, comparison...)."""
    return resources.files("sappc_lab").joinpath("configs", f"{name}.cfg")


def _apply_overrides(cfg, args):
    sim = cfg.sim
    changes = {}
    if getattr(args, "dt", None) is not None:
        changes["dt"] = args.dt
    if getattr(args, "duration", None) is not None:
        changes["duration"] = args.duration
    if getattr(args, "controller", None) is not None:
        changes["controller"] = args.controller
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if changes:
        cfg.sim = dataclasses.replace(sim, **changes)
    if getattr(args, "runs", None) is not None:
        cfg.campaign = dataclasses.replace(cfg.campaign, n_runs=args.runs)
    if getattr(args, "seed", None) is not None:
        cfg.campaign = dataclasses.replace(cfg.campaign,
                                           master_seed=args.seed)
    return cfg


def _out_dir(args):
    out = Path(args.out if args.out else "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_metrics_csv(path, rows):
    cols = ("run", "controller", "seed") + METRIC_FIELDS
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for tag, controller, seed, m in rows:
            vals = [str(tag), controller, str(seed)]
            for f in METRIC_FIELDS:
                v = getattr(m, f) if m is not None else ""
                vals.append("" if v is None else f"{v:.9g}"
                            if isinstance(v, float) else str(v))
            fh.write(",".join(vals) + "\n")


def _write_metadata(out, cfg, extra=None):
    meta = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.sim.seed,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": sys.version.split()[0],
    }
    if extra:
        meta.update(extra)
    with open(out / "run_metadata.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _say(args, msg):
    if not args.quiet:
        print(msg)


def cmd_run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    log, metrics = run_scenario(cfg.sim, cfg.scenario)
    name = cfg.sim.controller
    log.to_csv(out / f"trajectory_{name}.csv")
    _write_metrics_csv(out / "metrics.csv",
                       [("run", name, cfg.sim.seed, metrics)])
    _write_metadata(out, cfg)
    _say(args, f"settling_error        = {metrics.settling_error:.3e}")
    _say(args, f"terminal_error        = {metrics.terminal_error:.3e}")
    _say(args, f"rpf_deviation_at_t2   = {metrics.rpf_deviation_at_t2:.3e}")
    _say(args, f"containment_fraction  = {metrics.containment_fraction:.4f}")
    _say(args, f"trajectory -> {out / f'trajectory_{name}.csv'}")
    return 0


def cmd_compare(args):
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    rows = []
    results = {}
    for controller in ("sappc", "trappc", "blfppc"):
        sim = dataclasses.replace(cfg.sim, controller=controller)
        try:
            log, metrics = run_scenario(sim, cfg.scenario)
            log.to_csv(out / f"trajectory_{controller}.csv")
            results[controller] = metrics
            rows.append((controller, controller, sim.seed, metrics))
            _say(args, f"{controller:7}: terminal={metrics.terminal_error:.3e} "
                       f"overshoot={metrics.overshoot}")
        except SappcLabError as exc:
            results[controller] = None
            rows.append((controller, controller, sim.seed, None))
            _say(args, f"{controller:7}: aborted ({type(exc).__name__}: {exc})")
    _write_metrics_csv(out / "metrics.csv", rows)
    summary = {
        c: (None if m is None else {f: getattr(m, f) for f in METRIC_FIELDS})
        for c, m in results.items()
    }
    with open(out / "comparison_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    _write_metadata(out, cfg)
    return 0


def cmd_pulse(args):
    cfg = _apply_overrides(load_config(args.config), args)
    if cfg.scenario.disturbance.pulse is None:
        raise ValidationError("disturbance.pulse",
                              "pulse scenario requires a pulse block")
    out = _out_dir(args)
    rows = []
    for controller in ("sappc", "blfppc"):
        sim = dataclasses.replace(cfg.sim, controller=controller)
        log, metrics = run_scenario(sim, cfg.scenario)
        log.to_csv(out / f"trajectory_pulse_{controller}.csv")
        rows.append((controller, controller, sim.seed, metrics))
        _say(args, f"{controller:7}: recovered={metrics.recovered_after_pulse} "
                   f"terminal={metrics.terminal_error:.3e}")
    _write_metrics_csv(out / "metrics.csv", rows)
    _write_metadata(out, cfg)
    return 0


def cmd_campaign(args):
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    workers = cfg.campaign.parallelism
    env_cap = os.environ.get("SAPPC_LAB_THREADS")
    if env_cap:
        workers = min(workers, max(1, int(env_cap)))
    traj_dir = None
    if cfg.campaign.save_trajectories:
        traj_dir = out / "trajectories"
        traj_dir.mkdir(exist_ok=True)
    stats = run_campaign(cfg, parallelism=workers,
                         trajectory_dir=str(traj_dir) if traj_dir else None)
    rows = [(r.index, cfg.sim.controller, r.seed, r.metrics)
            for r in stats.results]
    _write_metrics_csv(out / "campaign_metrics.csv", rows)
    with open(out / "campaign_stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats.summary_dict(), fh, indent=2, sort_keys=True)
    _write_metadata(out, cfg, {"master_seed": cfg.campaign.master_seed,
                               "parallelism": workers})
    _say(args, f"runs      = {len(stats.results)}")
    _say(args, f"failures  = {stats.failure_count}")
    _say(args, f"deviation@t2 max = {stats.deviation_max:.3e}")
    _say(args, f"terminal max     = {stats.terminal_max:.3e}")
    return 2 if stats.failure_count else 0


def cmd_check(args):
    results = run_all_checks()
    all_ok = True
    for name, ok, detail in results:
        _say(args, f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        all_ok = all_ok and ok
    return 0 if all_ok else 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sappc-lab",
        description="Prescribed-performance attitude tracking laboratory",
    )
    parser.add_argument("--schema", action="store_true",
                        help="print the trajectory CSV column schema and exit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")
    for name, fn, needs_cfg in (
        ("run", cmd_run, True),
        ("compare", cmd_compare, True),
        ("pulse", cmd_pulse, True),
        ("campaign", cmd_campaign, True),
        ("check", cmd_check, False),
    ):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        p.add_argument("--quiet", action="store_true")
        if needs_cfg:
            p.add_argument("--config", required=True)
            p.add_argument("--out", default=None)
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--dt", type=float, default=None)
            p.add_argument("--duration", type=float, default=None)
        if name == "run":
            p.add_argument("--controller",
                           choices=("sappc", "trappc", "blfppc"), default=None)
        if name == "campaign":
            p.add_argument("--runs", type=int, default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        print(",".join(LOG_COLUMNS))
        return 0
    if not getattr(args, "fn", None):
        parser.print_help()
        return 1
    try:
        return args.fn(args)
    except (ParseError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except SappcLabError as exc:
        print(f"runtime abort: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
