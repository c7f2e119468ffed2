"""Scenario configuration: YAML loading, strict validation, round-trip.

The config grammar is nested key/value sections (YAML). Unknown keys are
rejected, every module's parameter invariant is checked at load time, and
validation errors name the offending key and the violated rule. All
experiment numbers live in these files, never in code.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .attitude import (
    ActuatorLimits,
    DisturbanceAxis,
    DisturbanceModel,
    Inertia,
    Pulse,
    ReferenceTrajectory,
    UnitQuaternion,
)
from .controllers import BlfGains, SappcGains, TrappcParams
from .engine import CONTROLLERS, SCENARIOS, ScenarioDefinition, SimConfig
from .errors import ParseError, ValidationError
from .rpf import ConstraintParams
from .smetf import ShearParams

DEG = math.pi / 180.0

_TRIG = {"cos": (math.cos, math.sin, -1.0), "sin": (math.sin, math.cos, 1.0)}


def _trig_reference(q_d0, amplitude_deg, axes):
    """Reference rate profile amp·fn(t/divisor) per axis, in deg/s."""
    amp = amplitude_deg * DEG
    funcs = []
    for ax in axes:
        fn, dfn, dsign = _TRIG[ax["fn"]]
        div = float(ax["divisor"])
        sign = float(ax["sign"])
        funcs.append((fn, dfn, dsign, div, sign))

    def omega_d(t):
        return tuple(sign * amp * fn(t / div) for fn, _, _, div, sign in funcs)

    def omega_d_dot(t):
        return tuple(
            sign * amp * dsign * dfn(t / div) / div
            for _, dfn, dsign, div, sign in funcs
        )

    return ReferenceTrajectory(q_d0, omega_d, omega_d_dot)


@dataclass
class CampaignSettings:
    n_runs: int = 200
    euler_range_deg: float = 85.0
    master_seed: int = 20260810
    parallelism: int = 8
    save_trajectories: bool = False

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValidationError("campaign.n_runs", "must be >= 1")
        if not (0.0 < self.euler_range_deg < 90.0):
            raise ValidationError("campaign.euler_range_deg",
                                  "must lie in (0, 90)")
        if self.parallelism < 1:
            raise ValidationError("campaign.parallelism", "must be >= 1")


@dataclass
class ScenarioConfig:
    """Validated parameter tree: simulation plus scenario definition."""

    sim: SimConfig
    scenario: ScenarioDefinition
    campaign: CampaignSettings
    tree: dict = field(repr=False, default_factory=dict)

    def config_hash(self):
        canon = yaml.safe_dump(self.tree, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def _require(tree, key, path):
    if key not in tree:
        raise ValidationError(f"{path}.{key}" if path else key, "missing key")
    return tree[key]


def _check_keys(tree, allowed, path):
    unknown = set(tree) - set(allowed)
    if unknown:
        raise ValidationError(
            f"{path}.{sorted(unknown)[0]}" if path else sorted(unknown)[0],
            "unknown key",
        )


def _vec3(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ValidationError(path, "must be a 3-vector")
    return [float(x) for x in value]


def _quat_xyzw(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ValidationError(path, "must be a 4-vector [x, y, z, w]")
    arr = np.array([float(x) for x in value])
    n = float(np.linalg.norm(arr))
    if abs(n - 1.0) > 1e-3:
        raise ValidationError(path, f"norm {n:.6f} too far from 1")
    return UnitQuaternion.from_xyzw(arr / n)


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            tree = yaml.safe_load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}" if mark else ""
        raise ParseError(f"{path}{loc}: {exc}") from exc
    if not isinstance(tree, dict):
        raise ParseError(f"{path}: top level must be a mapping")
    return build_config(tree)


def loads_config(text) -> ScenarioConfig:
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}: " if mark else ""
        raise ParseError(f"{loc}{exc}") from exc
    if not isinstance(tree, dict):
        raise ParseError("top level must be a mapping")
    return build_config(tree)


def serialize_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.tree, sort_keys=True)


def build_config(tree) -> ScenarioConfig:
    _check_keys(tree, ("sim", "inertia", "initial", "reference",
                       "disturbance", "actuator", "rpf", "constraint",
                       "shear", "gains", "benchmarks", "campaign"), "")

    sim_tree = dict(_require(tree, "sim", ""))
    _check_keys(sim_tree, ("dt", "duration", "scenario", "controller",
                           "seed"), "sim")
    scenario_name = sim_tree.get("scenario", "nominal")
    if scenario_name not in SCENARIOS:
        raise ValidationError("sim.scenario", f"must be one of {SCENARIOS}")
    controller = sim_tree.get("controller", "sappc")
    if controller not in CONTROLLERS:
        raise ValidationError("sim.controller", f"must be one of {CONTROLLERS}")
    try:
        sim = SimConfig(
            dt=float(sim_tree.get("dt", 0.01)),
            duration=float(sim_tree.get("duration", 100.0)),
            scenario=scenario_name,
            controller=controller,
            seed=int(sim_tree.get("seed", 0)),
        )
    except ValueError as exc:
        raise ValidationError("sim", str(exc)) from exc

    in_tree = dict(_require(tree, "inertia", ""))
    _check_keys(in_tree, ("J",), "inertia")
    jrows = _require(in_tree, "J", "inertia")
    try:
        inertia = Inertia(np.array(jrows, dtype=float))
    except ValueError as exc:
        raise ValidationError("inertia.J", str(exc)) from exc

    init_tree = dict(_require(tree, "initial", ""))
    _check_keys(init_tree, ("q_s", "omega_s"), "initial")
    q_s0 = _quat_xyzw(_require(init_tree, "q_s", "initial"), "initial.q_s")
    omega_s0 = np.array(_vec3(init_tree.get("omega_s", [0, 0, 0]),
                              "initial.omega_s"))

    ref_tree = dict(_require(tree, "reference", ""))
    _check_keys(ref_tree, ("q_d0", "omega_d"), "reference")
    q_d0 = _quat_xyzw(ref_tree.get("q_d0", [0, 0, 0, 1]), "reference.q_d0")
    od = dict(_require(ref_tree, "omega_d", "reference"))
    _check_keys(od, ("amplitude_deg", "axes"), "reference.omega_d")
    axes = _require(od, "axes", "reference.omega_d")
    if len(axes) != 3:
        raise ValidationError("reference.omega_d.axes", "need 3 axis entries")
    for i, ax in enumerate(axes):
        _check_keys(ax, ("fn", "divisor", "sign"), f"reference.omega_d.axes[{i}]")
        if ax.get("fn") not in _TRIG:
            raise ValidationError(f"reference.omega_d.axes[{i}].fn",
                                  "must be sin or cos")
        if float(ax.get("divisor", 0.0)) <= 0.0:
            raise ValidationError(f"reference.omega_d.axes[{i}].divisor",
                                  "must be > 0")
    reference = _trig_reference(q_d0, float(od.get("amplitude_deg", 0.0)), axes)

    dist_tree = dict(_require(tree, "disturbance", ""))
    _check_keys(dist_tree, ("scale", "omega_p", "axes", "bound", "pulse"),
                "disturbance")
    daxes = _require(dist_tree, "axes", "disturbance")
    if len(daxes) != 3:
        raise ValidationError("disturbance.axes", "need 3 axis entries")
    axes_objs = []
    for i, ax in enumerate(daxes):
        _check_keys(ax, ("sin_amp", "sin_mult", "cos_amp", "cos_mult",
                         "offset"), f"disturbance.axes[{i}]")
        axes_objs.append(DisturbanceAxis(
            float(ax.get("sin_amp", 0.0)), float(ax.get("sin_mult", 1.0)),
            float(ax.get("cos_amp", 0.0)), float(ax.get("cos_mult", 1.0)),
            float(ax.get("offset", 0.0)),
        ))
    pulse = None
    if dist_tree.get("pulse") is not None:
        p = dict(dist_tree["pulse"])
        _check_keys(p, ("onset", "duration", "amplitude"), "disturbance.pulse")
        if float(p.get("duration", 0.0)) <= 0.0:
            raise ValidationError("disturbance.pulse.duration", "must be > 0")
        pulse = Pulse(float(_require(p, "onset", "disturbance.pulse")),
                      float(p["duration"]),
                      tuple(_vec3(_require(p, "amplitude",
                                           "disturbance.pulse"),
                                  "disturbance.pulse.amplitude")))
    disturbance = DisturbanceModel(
        axes=tuple(axes_objs),
        scale=float(dist_tree.get("scale", 0.001)),
        omega_p=float(dist_tree.get("omega_p", 0.01)),
        bound=float(dist_tree.get("bound", 0.06)),
        pulse=pulse,
    )

    act_tree = dict(tree.get("actuator", {}))
    _check_keys(act_tree, ("u_max", "u_min"), "actuator")
    try:
        limits = ActuatorLimits(float(act_tree.get("u_max", 0.5)),
                                float(act_tree.get("u_min", 0.005)))
    except ValueError as exc:
        raise ValidationError("actuator", str(exc)) from exc

    rpf_tree = dict(_require(tree, "rpf", ""))
    _check_keys(rpf_tree, ("rho_e0", "rho_einf", "decay", "t2", "g_inf"),
                "rpf")
    rho_e0 = rpf_tree.get("rho_e0", 0.4)
    if isinstance(rho_e0, str):
        if rho_e0 != "initial-error":
            raise ValidationError("rpf.rho_e0",
                                  "must be a number, 3-list, or 'initial-error'")
    elif isinstance(rho_e0, (list, tuple)):
        rho_e0 = _vec3(rho_e0, "rpf.rho_e0")
    else:
        rho_e0 = float(rho_e0)
    rho_einf = float(rpf_tree.get("rho_einf", 1e-6))
    g_inf = float(rpf_tree.get("g_inf", 3e-5))
    t2 = float(rpf_tree.get("t2", 20.0))
    decay = float(rpf_tree.get("decay", 0.45))
    if rho_einf >= g_inf:
        raise ValidationError("rpf.g_inf", "must be > rho_einf")
    if rho_einf <= 0.0:
        raise ValidationError("rpf.rho_einf", "must be > 0")
    if t2 <= 0.0:
        raise ValidationError("rpf.t2", "must be > 0")
    if decay <= 0.0:
        raise ValidationError("rpf.decay", "must be > 0")
    if sim.duration < t2:
        raise ValidationError("sim.duration", "must be >= rpf.t2")

    con_tree = dict(tree.get("constraint", {}))
    _check_keys(con_tree, ("b0",), "constraint")
    b0 = float(con_tree.get("b0", 0.5 * g_inf))
    if b0 <= 0.0:
        raise ValidationError("constraint.b0", "must be > 0")

    shear_tree = dict(tree.get("shear", {}))
    _check_keys(shear_tree, ("theta_deg",), "shear")
    theta_deg = float(shear_tree.get("theta_deg", 10.0))
    if not (0.0 < theta_deg < 90.0):
        raise ValidationError("shear.theta_deg", "must lie in (0, 90)")

    gains_tree = dict(tree.get("gains", {}))
    _check_keys(gains_tree, ("k_q", "k_omega", "p", "t1", "t2", "t3", "mu",
                             "d_m", "v_floor", "alpha_max"), "gains")
    mu = gains_tree.get("mu", [2e-4, 2e-4, 2e-4])
    try:
        gains = SappcGains(
            k_q=float(gains_tree.get("k_q", 0.6)),
            k_omega=float(gains_tree.get("k_omega", 8.0)),
            p=float(gains_tree.get("p", 0.1)),
            t1_gain=float(gains_tree.get("t1", 3.0)),
            t2_gain=float(gains_tree.get("t2", 3.0)),
            t3_gain=float(gains_tree.get("t3", 2.0)),
            mu=tuple(_vec3(mu, "gains.mu")),
            d_m=float(gains_tree.get("d_m", 0.06)),
            v_floor=float(gains_tree.get("v_floor", 1e-12)),
            alpha_max=float(gains_tree.get("alpha_max", 0.15)),
        )
    except ValueError as exc:
        key = "gains.t3" if "t3_gain" in str(exc) else "gains"
        raise ValidationError(key, str(exc)) from exc

    bench_tree = dict(tree.get("benchmarks", {}))
    _check_keys(bench_tree, ("trappc", "blfppc"), "benchmarks")
    tra_tree = dict(bench_tree.get("trappc", {}))
    _check_keys(tra_tree, ("k_const", "rho_e0", "rho_einf", "decay", "k_q",
                           "k_omega", "mu", "alpha_max"), "benchmarks.trappc")
    try:
        trappc = TrappcParams(
            k_const=float(tra_tree.get("k_const", 0.3)),
            rho_e0=float(tra_tree.get("rho_e0", 2.0)),
            rho_einf=float(tra_tree.get("rho_einf", 2e-3)),
            l=float(tra_tree.get("decay", 0.3)),
        )
    except ValueError as exc:
        raise ValidationError("benchmarks.trappc", str(exc)) from exc
    trappc_gains = None
    if any(k in tra_tree for k in ("k_q", "k_omega", "mu", "alpha_max")):
        tra_mu = tra_tree.get("mu", list(gains.mu))
        trappc_gains = SappcGains(
            k_q=float(tra_tree.get("k_q", gains.k_q)),
            k_omega=float(tra_tree.get("k_omega", gains.k_omega)),
            p=gains.p, t1_gain=gains.t1_gain, t2_gain=gains.t2_gain,
            t3_gain=gains.t3_gain,
            mu=tuple(_vec3(tra_mu, "benchmarks.trappc.mu")),
            d_m=gains.d_m, v_floor=gains.v_floor,
            alpha_max=float(tra_tree.get("alpha_max", gains.alpha_max)),
        )

    blf_tree = dict(bench_tree.get("blfppc", {}))
    _check_keys(blf_tree, ("k1", "k2", "k3", "mu", "alpha_max", "ftppf"),
                "benchmarks.blfppc")
    blf_mu = blf_tree.get("mu", list(gains.mu))
    try:
        blf_gains = BlfGains(
            k1=float(blf_tree.get("k1", 10.0)),
            k2=float(blf_tree.get("k2", 8.0)),
            k3=float(blf_tree.get("k3", 0.01)),
            mu=tuple(_vec3(blf_mu, "benchmarks.blfppc.mu")),
            d_m=gains.d_m,
            alpha_max=float(blf_tree.get("alpha_max", gains.alpha_max)),
        )
    except ValueError as exc:
        raise ValidationError("benchmarks.blfppc", str(exc)) from exc
    ftppf_tree = dict(blf_tree.get("ftppf", {}))
    _check_keys(ftppf_tree, ("rho_init", "rho_tf", "t_f", "m"),
                "benchmarks.blfppc.ftppf")
    blf_init = float(ftppf_tree.get("rho_init", 0.5))
    blf_rho_tf = float(ftppf_tree.get("rho_tf", 2e-4))
    blf_tf = float(ftppf_tree.get("t_f", 20.0))
    blf_m = float(ftppf_tree.get("m", 0.5))
    if blf_init <= blf_rho_tf:
        raise ValidationError("benchmarks.blfppc.ftppf.rho_init",
                              "must be > rho_tf")

    camp_tree = dict(tree.get("campaign", {}))
    _check_keys(camp_tree, ("n_runs", "euler_range_deg", "master_seed",
                            "parallelism", "save_trajectories"), "campaign")
    campaign = CampaignSettings(
        n_runs=int(camp_tree.get("n_runs", 200)),
        euler_range_deg=float(camp_tree.get("euler_range_deg", 85.0)),
        master_seed=int(camp_tree.get("master_seed", 20260810)),
        parallelism=int(camp_tree.get("parallelism", 8)),
        save_trajectories=bool(camp_tree.get("save_trajectories", False)),
    )

    scenario = ScenarioDefinition(
        inertia=inertia,
        reference=reference,
        disturbance=disturbance,
        limits=limits,
        q_s0=q_s0,
        omega_s0=omega_s0,
        rpf_rho_e0=rho_e0,
        rpf_rho_einf=rho_einf,
        rpf_l=decay,
        rpf_t2=t2,
        rpf_g_inf=g_inf,
        constraint=ConstraintParams(b0),
        shear=ShearParams.from_degrees(theta_deg),
        gains=gains,
        trappc=trappc,
        trappc_gains=trappc_gains,
        blf_gains=blf_gains,
        blf_ftppf_init=blf_init,
        blf_ftppf_tf=blf_tf,
        blf_ftppf_rho_tf=blf_rho_tf,
        blf_ftppf_m=blf_m,
    )
    return ScenarioConfig(sim=sim, scenario=scenario, campaign=campaign,
                          tree=tree)
