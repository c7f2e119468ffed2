"""Render figures from sappc-lab CSV outputs.

Six figure kinds, all driven purely by the CSVs the simulator emits (this
package never computes control or dynamics):

* ``trajectory``            per-axis error with the reference curve and the
                            shaded (1±δ)·ρ constraint tube, star at t2
* ``actuator``              per-axis torque history
* ``comparison``            per-axis error overlay of several controllers
* ``pulse``                 error overlay around a disturbance pulse, tubes
                            shaded per controller
* ``campaign-scatter``      per-run deviation-at-t2 and terminal error
                            against their reference lines
* ``campaign-trajectories`` overlay of many per-run error trajectories

Use as a script::

    sappc-plots --kind trajectory --out fig.png trajectory_sappc.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = (
    "trajectory",
    "actuator",
    "comparison",
    "pulse",
    "campaign-scatter",
    "campaign-trajectories",
)

TRAJECTORY_COLUMNS = (
    ["t"]
    + [f"q_ev{i}" for i in (1, 2, 3)]
    + [f"rho{i}" for i in (1, 2, 3)]
    + [f"delta{i}" for i in (1, 2, 3)]
    + [f"z_s{i}" for i in (1, 2, 3)]
    + [f"eps_s{i}" for i in (1, 2, 3)]
    + [f"omega_e{i}" for i in (1, 2, 3)]
    + [f"u{i}" for i in (1, 2, 3)]
    + [f"d{i}" for i in (1, 2, 3)]
    + ["V1", "V2", "V3"]
)

CAMPAIGN_COLUMNS = ("run", "rpf_deviation_at_t2", "terminal_error")

DEVIATION_LINE = 1e-4     # reference lines of the campaign scatter
TERMINAL_LINE = 5e-5


class SchemaMismatch(Exception):
    """CSV does not carry the sim-engine schema; names what is missing."""


@dataclass
class PlotSpec:
    inputs: list
    kind: str
    output: str
    t2: float = 20.0
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input CSV required")


def _read_csv(path, required):
    """Parse the required columns (others may hold non-numeric values)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file, no header row")
        rows = list(reader)
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaMismatch(f"{path}: missing column {missing[0]!r}")
    if not rows:
        raise SchemaMismatch(f"{path}: no data rows")
    cols = [header.index(c) for c in required]
    try:
        data = np.array([[float(row[c]) for c in cols] for row in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaMismatch(f"{path}: bad cell in a required column ({exc})")
    idx = {name: k for k, name in enumerate(required)}
    return idx, data


def load_trajectory(path):
    return _read_csv(path, TRAJECTORY_COLUMNS)


def load_campaign_metrics(path):
    return _read_csv(path, CAMPAIGN_COLUMNS)


def _axis_cols(idx, prefix):
    return [idx[f"{prefix}{i}"] for i in (1, 2, 3)]


def _tube_bounds(rho, delta):
    lo = rho * (1.0 - delta)
    hi = rho * (1.0 + delta)
    return np.minimum(lo, hi), np.maximum(lo, hi)


def _label_for(path, explicit):
    if explicit:
        return explicit
    stem = Path(path).stem
    return stem.split("_")[-1] if "_" in stem else stem


def render_trajectory(spec: PlotSpec):
    idx, data = load_trajectory(spec.inputs[0])
    t = data[:, idx["t"]]
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    for i, ax in enumerate(axes):
        e = data[:, idx[f"q_ev{i + 1}"]]
        rho = data[:, idx[f"rho{i + 1}"]]
        delta = data[:, idx[f"delta{i + 1}"]]
        lo, hi = _tube_bounds(rho, delta)
        ax.fill_between(t, lo, hi, alpha=0.25, color="tab:blue",
                        label="constraint tube")
        ax.plot(t, rho, "k:", lw=1.2, label="reference curve")
        ax.plot(t, e, "-", color="tab:red", lw=1.0, label="error")
        k2 = int(np.argmin(np.abs(t - spec.t2)))
        ax.plot([t[k2]], [e[k2]], "*", color="tab:blue", markersize=12,
                label=f"settling time {spec.t2:g} s")
        ax.set_ylabel(f"q_ev{i + 1}")
        ax.set_yscale("symlog", linthresh=1e-5)
        if i == 0:
            ax.legend(loc="upper right", fontsize="small")
    axes[-1].set_xlabel("time [s]")
    fig.suptitle("Attitude error vs reference performance curve")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


def render_actuator(spec: PlotSpec):
    idx, data = load_trajectory(spec.inputs[0])
    t = data[:, idx["t"]]
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    for i, ax in enumerate(axes):
        ax.plot(t, data[:, idx[f"u{i + 1}"]], lw=0.8, color="tab:purple")
        ax.set_ylabel(f"u{i + 1} [N·m]")
    axes[-1].set_xlabel("time [s]")
    fig.suptitle("Actuator output")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


def render_comparison(spec: PlotSpec, shade_tubes=False):
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    colors = ("tab:blue", "tab:green", "tab:orange", "tab:red")
    for j, path in enumerate(spec.inputs):
        idx, data = load_trajectory(path)
        t = data[:, idx["t"]]
        label = _label_for(path, spec.labels[j] if j < len(spec.labels)
                           else None)
        color = colors[j % len(colors)]
        for i, ax in enumerate(axes):
            e = data[:, idx[f"q_ev{i + 1}"]]
            if shade_tubes:
                rho = data[:, idx[f"rho{i + 1}"]]
                delta = data[:, idx[f"delta{i + 1}"]]
                lo, hi = _tube_bounds(rho, delta)
                ax.fill_between(t, lo, hi, alpha=0.15, color=color)
            ax.plot(t, e, lw=1.0, color=color,
                    label=label if i == 0 else None)
            ax.set_ylabel(f"q_ev{i + 1}")
            ax.set_yscale("symlog", linthresh=1e-5)
    axes[0].legend(loc="upper right", fontsize="small")
    axes[-1].set_xlabel("time [s]")
    fig.suptitle("Attitude error comparison")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


def render_pulse(spec: PlotSpec):
    render_comparison(spec, shade_tubes=True)


def render_campaign_scatter(spec: PlotSpec):
    idx, data = load_campaign_metrics(spec.inputs[0])
    runs = data[:, idx["run"]]
    dev = data[:, idx["rpf_deviation_at_t2"]]
    term = data[:, idx["terminal_error"]]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax1.scatter(runs, dev, s=10, color="tab:blue")
    ax1.axhline(DEVIATION_LINE, color="tab:red", ls="--",
                label=f"{DEVIATION_LINE:g} line")
    ax1.set_yscale("log")
    ax1.set_xlabel("run")
    ax1.set_ylabel("|q_ev − ρ| at t2")
    ax1.set_title("Reference tracking error at settling")
    ax1.legend(fontsize="small")
    ax2.scatter(runs, term, s=10, color="tab:green")
    ax2.axhline(TERMINAL_LINE, color="tab:red", ls="--",
                label=f"{TERMINAL_LINE:g} line")
    ax2.set_yscale("log")
    ax2.set_xlabel("run")
    ax2.set_ylabel("steady-state max |q_ev|")
    ax2.set_title("Steady-state control error")
    ax2.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


def render_campaign_trajectories(spec: PlotSpec):
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    for path in spec.inputs:
        idx, data = load_trajectory(path)
        t = data[:, idx["t"]]
        for i, ax in enumerate(axes):
            ax.plot(t, data[:, idx[f"q_ev{i + 1}"]], lw=0.5, alpha=0.35,
                    color="tab:blue")
    for i, ax in enumerate(axes):
        ax.set_ylabel(f"q_ev{i + 1}")
        ax.set_yscale("symlog", linthresh=1e-5)
    axes[-1].set_xlabel("time [s]")
    fig.suptitle(f"Campaign state trajectories ({len(spec.inputs)} runs)")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)


_RENDERERS = {
    "trajectory": render_trajectory,
    "actuator": render_actuator,
    "comparison": render_comparison,
    "pulse": render_pulse,
    "campaign-scatter": render_campaign_scatter,
    "campaign-trajectories": render_campaign_trajectories,
}


def render(spec: PlotSpec):
    """Render the figure described by ``spec``; returns the output path."""
    _RENDERERS[spec.kind](spec)
    return spec.output


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sappc-plots",
        description="Render figures from sappc-lab CSV outputs",
    )
    parser.add_argument("inputs", nargs="+", help="input CSV path(s)")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--t2", type=float, default=20.0,
                        help="settling-time marker for trajectory figures")
    parser.add_argument("--labels", nargs="*", default=[],
                        help="series labels for comparison figures")
    args = parser.parse_args(argv)
    try:
        render(PlotSpec(args.inputs, args.kind, args.out, args.t2,
                        args.labels))
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
