"""Fixed-step closed-loop simulation, trajectory logging and metrics.

The plant state is (q_e, omega_e, q_d) advanced with a classical RK4 step
at a fixed dt; the controller runs at the integrator rate with its torque
held constant over each step (zero-order hold). Quaternions are
renormalized after every step. A generic array-based ``rk4_step`` is
exposed for tests and the scalar stability oracle; the closed-loop driver
uses an inlined tuple form of the same tableau for speed (the two are
asserted equivalent in the test suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import quat
from .attitude import (
    ActuatorLimits,
    DisturbanceModel,
    Inertia,
    ReferenceTrajectory,
    UnitQuaternion,
    apply_actuator,
    disturbance_at,
    error_dynamics_scalar,
    error_quaternion,
)
from .controllers import (
    BlfGains,
    BlfppcController,
    FtppfParams,
    SappcController,
    SappcGains,
    TrappcController,
    TrappcParams,
)
from .errors import IncompleteLog, NonFiniteState
from .rpf import ConstraintParams, RpfParams, RpfProfile
from .smetf import ShearParams

LOG_COLUMNS = (
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

SCENARIOS = ("nominal", "comparison", "pulse", "custom")
CONTROLLERS = ("sappc", "trappc", "blfppc")
CAPTURE_DWELL_S = 0.25      # consecutive in-tube time that counts as capture
STEADY_WINDOW_S = 25.0      # terminal-error window measured from the end
RECOVERY_WINDOW_S = 10.0    # final stretch that must stay in-tube to recover
GAIN_SAFE_EXP = 700.0       # e^x overflow guard in the scalar oracle


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    duration: float = 100.0
    scenario: str = "nominal"
    controller: str = "sappc"
    seed: int = 0
    output_path: Optional[str] = None

    def __post_init__(self):
        if not (0.0 < self.dt <= 0.05):
            raise ValueError("dt must lie in (0, 0.05]")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}")


@dataclass
class ScenarioDefinition:
    """Everything one closed-loop run needs besides SimConfig."""

    inertia: Inertia
    reference: ReferenceTrajectory
    disturbance: DisturbanceModel
    limits: ActuatorLimits
    q_s0: UnitQuaternion
    omega_s0: np.ndarray
    rpf_rho_e0: object            # float, 3-list, or "initial-error"
    rpf_rho_einf: float
    rpf_l: float
    rpf_t2: float
    rpf_g_inf: float
    constraint: ConstraintParams
    shear: ShearParams
    gains: SappcGains
    trappc: TrappcParams = field(default_factory=TrappcParams)
    trappc_gains: Optional[SappcGains] = None
    blf_gains: BlfGains = field(default_factory=BlfGains)
    blf_ftppf_init: float = 0.5
    blf_ftppf_tf: float = 20.0
    blf_ftppf_rho_tf: float = 2e-4
    blf_ftppf_m: float = 0.5

    def task_profiles(self, e0):
        """Per-axis task RPF profiles, signs and magnitudes from e0."""
        profiles = []
        for i in range(3):
            if self.rpf_rho_e0 == "initial-error":
                r0 = None
            elif np.ndim(self.rpf_rho_e0) == 0:
                r0 = float(self.rpf_rho_e0)
            else:
                r0 = float(self.rpf_rho_e0[i])
            params = RpfParams.for_initial_error(
                float(e0[i]), r0, self.rpf_rho_einf, self.rpf_l,
                self.rpf_t2, self.rpf_g_inf,
            )
            profiles.append(RpfProfile(params))
        return profiles


@dataclass
class TrajectoryLog:
    """Time-stamped record of every logged signal, one row per step."""

    columns: tuple
    data: np.ndarray

    @property
    def t(self):
        return self.data[:, 0]

    def col(self, name):
        return self.data[:, self.columns.index(name)]

    def block(self, prefix):
        i = self.columns.index(prefix + "1")
        return self.data[:, i:i + 3]

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.data:
                fh.write(",".join(f"{x:.9g}" for x in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            header = tuple(fh.readline().strip().split(","))
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(header, data)


@dataclass
class RunMetrics:
    settling_error: float
    terminal_error: float
    rpf_deviation_at_t2: float
    containment_fraction: float
    recovered_after_pulse: Optional[bool]
    overshoot: bool


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------

def rk4_step(f, y, t, dt, quat_slices=()):
    """Classical RK4 step for array states.

    ``quat_slices`` lists (start, stop) index ranges holding unit
    quaternions; each is renormalized after the step. Raises
    NonFiniteState if any component of the result is not finite.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    y = np.asarray(y, dtype=float)
    k1 = np.asarray(f(t, y))
    k2 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k1))
    k3 = np.asarray(f(t + 0.5 * dt, y + 0.5 * dt * k2))
    k4 = np.asarray(f(t + dt, y + dt * k3))
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    for start, stop in quat_slices:
        norm = float(np.linalg.norm(out[start:stop]))
        out[start:stop] /= norm
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("integration produced a non-finite component")
    return out


def _axpy4(y, a, x):
    return (y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2], y[3] + a * x[3])


def _axpy3(y, a, x):
    return (y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2])


def _plant_rk4(q_e, w_e, q_d, t, dt, u, scen: ScenarioDefinition):
    """Tuple-form RK4 over the plant state; matches rk4_step's tableau."""
    omega_d = scen.reference.omega_d
    omega_d_dot = scen.reference.omega_d_dot
    dist = scen.disturbance
    inertia = scen.inertia

    def deriv(qe, we, qd, tt):
        d = disturbance_at(dist, tt)
        qe_dot, we_dot = error_dynamics_scalar(
            qe, we, inertia, omega_d(tt), omega_d_dot(tt), u, d
        )
        return qe_dot, we_dot, quat.q_kinematics(qd, omega_d(tt))

    h = 0.5 * dt
    k1 = deriv(q_e, w_e, q_d, t)
    k2 = deriv(_axpy4(q_e, h, k1[0]), _axpy3(w_e, h, k1[1]),
               _axpy4(q_d, h, k1[2]), t + h)
    k3 = deriv(_axpy4(q_e, h, k2[0]), _axpy3(w_e, h, k2[1]),
               _axpy4(q_d, h, k2[2]), t + h)
    k4 = deriv(_axpy4(q_e, dt, k3[0]), _axpy3(w_e, dt, k3[1]),
               _axpy4(q_d, dt, k3[2]), t + dt)
    s = dt / 6.0
    q_e = tuple(
        q_e[i] + s * (k1[0][i] + 2.0 * k2[0][i] + 2.0 * k3[0][i] + k4[0][i])
        for i in range(4)
    )
    w_e = tuple(
        w_e[i] + s * (k1[1][i] + 2.0 * k2[1][i] + 2.0 * k3[1][i] + k4[1][i])
        for i in range(3)
    )
    q_d = tuple(
        q_d[i] + s * (k1[2][i] + 2.0 * k2[2][i] + 2.0 * k3[2][i] + k4[2][i])
        for i in range(4)
    )
    return quat.q_normalize(q_e), w_e, quat.q_normalize(q_d)


# ---------------------------------------------------------------------------
# closed loop
# ---------------------------------------------------------------------------

def make_controller(name, scen: ScenarioDefinition, task_profiles, signs):
    u_max = scen.limits.u_max
    if name == "sappc":
        return SappcController(task_profiles, scen.constraint, scen.shear,
                               scen.gains, scen.inertia, u_max)
    if name == "trappc":
        gains = scen.trappc_gains if scen.trappc_gains is not None else scen.gains
        return TrappcController(scen.trappc, signs, gains, scen.inertia, u_max)
    if name == "blfppc":
        ftppf = FtppfParams.design(scen.blf_ftppf_init, scen.blf_ftppf_rho_tf,
                                   scen.blf_ftppf_tf, scen.blf_ftppf_m)
        return BlfppcController(ftppf, signs, scen.blf_gains, scen.inertia,
                                scen.gains, u_max)
    raise ValueError(f"unknown controller {name!r}")


def run_scenario(sim: SimConfig, scen: ScenarioDefinition):
    """Simulate the closed loop; returns (TrajectoryLog, RunMetrics)."""
    if sim.duration < scen.rpf_t2:
        raise ValueError("duration must cover the RPF settling time t2")
    q_d0 = scen.reference.q_d0
    q_e0 = error_quaternion(scen.q_s0, q_d0)
    e0 = q_e0.v
    signs = tuple(1.0 if x >= 0.0 else -1.0 for x in e0)
    task_profiles = scen.task_profiles(e0)
    controller = make_controller(sim.controller, scen, task_profiles, signs)

    q_e = q_e0.as_tuple()
    q_d = q_d0.as_tuple()
    ce = quat.q_rotmat(q_e)
    wd0 = scen.reference.omega_d(0.0)
    w_e = tuple(
        float(scen.omega_s0[i]) - quat.m_vec(ce, wd0)[i] for i in range(3)
    )

    n_steps = int(round(sim.duration / sim.dt))
    data = np.empty((n_steps + 1, len(LOG_COLUMNS)))
    omega_d = scen.reference.omega_d
    omega_d_dot = scen.reference.omega_d_dot
    for k in range(n_steps + 1):
        t = k * sim.dt
        u_cmd, diag = controller.step(q_e, w_e, t, sim.dt,
                                      omega_d(t), omega_d_dot(t))
        u = apply_actuator(u_cmd, scen.limits)
        d = disturbance_at(scen.disturbance, t)
        row = data[k]
        row[0] = t
        row[1:4] = (q_e[1], q_e[2], q_e[3])
        row[4:7] = diag.rho
        row[7:10] = diag.delta
        row[10:13] = diag.z_s
        row[13:16] = diag.eps
        row[16:19] = w_e
        row[19:22] = u
        row[22:25] = d
        row[25:28] = (diag.v1, diag.v2, diag.v3)
        if k == n_steps:
            break
        q_e, w_e, q_d = _plant_rk4(q_e, w_e, q_d, t, sim.dt, u, scen)
        for x in q_e:
            if not math.isfinite(x):
                raise NonFiniteState("q_e diverged", last_valid_row=k)
        for x in w_e:
            if not math.isfinite(x):
                raise NonFiniteState("omega_e diverged", last_valid_row=k)

    log = TrajectoryLog(tuple(LOG_COLUMNS), data)
    metrics = compute_metrics(
        log, task_profiles, scen.rpf_t2,
        b0=scen.constraint.b0,
        pulse=scen.disturbance.pulse,
    )
    return log, metrics


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def first_capture_index(inside, dwell):
    """Index of the first entry that persists for ``dwell`` samples."""
    run = 0
    for k, flag in enumerate(inside):
        run = run + 1 if flag else 0
        if run >= dwell:
            return k - dwell + 1
    return None


def compute_metrics(log: TrajectoryLog, task_profiles, t2, b0,
                    pulse=None) -> RunMetrics:
    t = log.t
    duration = t[-1]
    if duration + 1e-9 < t2:
        raise IncompleteLog("log ends before the RPF settling time")
    dt = t[1] - t[0]
    e = log.block("q_ev")
    rho = log.block("rho")
    delta = log.block("delta")
    z_s = log.block("z_s")

    i2 = int(np.argmin(np.abs(t - t2)))
    settling_error = float(np.abs(e[i2]).max())

    steady = t >= duration - STEADY_WINDOW_S
    terminal_error = float(np.abs(e[steady]).max())

    # deviation against the task curve (controller-independent)
    rho_t2 = np.array([p.value_rate(t2)[0] for p in task_profiles])
    rpf_deviation = float(np.abs(e[i2] - rho_t2).max())

    inside = np.abs(z_s - 1.0) < delta
    dwell = max(1, int(round(CAPTURE_DWELL_S / dt)))
    fractions = []
    capture_idx = []
    for i in range(3):
        first = first_capture_index(inside[:, i], dwell)
        capture_idx.append(first)
        fractions.append(0.0 if first is None else float(inside[first:, i].mean()))
    containment_fraction = min(fractions)

    recovered = None
    if pulse is not None:
        final = t >= duration - RECOVERY_WINDOW_S
        recovered = bool(inside[final].all())

    # overshoot: the error state crosses the origin against its initial
    # sign by more than the tube half-width b0 before t2. A zero crossing
    # reverses the sign of (q_evi − ρ_i) for the whole family of signed
    # reference curves below the trajectory's start; controllers that ride
    # the curve (or are barred from zero) never cross.
    overshoot = False
    pre = int(np.searchsorted(t, t2, side="right"))
    for i in range(3):
        s0 = math.copysign(1.0, float(e[0, i]))
        flipped = (np.sign(e[:pre, i]) == -s0) & (np.abs(e[:pre, i]) > b0)
        overshoot = overshoot or bool(np.any(flipped))
    return RunMetrics(
        settling_error=settling_error,
        terminal_error=terminal_error,
        rpf_deviation_at_t2=rpf_deviation,
        containment_fraction=containment_fraction,
        recovered_after_pulse=recovered,
        overshoot=overshoot,
    )


# ---------------------------------------------------------------------------
# scalar predefined-time stability oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    settle_time: float
    bound: float
    satisfied: bool
    residual_threshold: float


def theorem1_oracle(a, p, t_c, theta=0.0, mu=0.5, v0=1.0, dt=1e-4,
                    v_settle=1e-12) -> OracleResult:
    """Integrate V̇ = −(1/(pT_c))·e^{aV^p}·V^{1−p} + Θ and check the bound.

    Θ = 0: settling time to V <= v_settle must be <= T_c/a.
    Θ > 0: first entry of e^{aV^p}V^{1−p} <= pT_cΘ/(1−μ) must come by
    T_c/(aμ).
    """
    if not (0.0 < p < 1.0) or a <= 0.0 or t_c <= 0.0:
        raise ValueError("require p in (0,1), a > 0, t_c > 0")
    if not (0.0 < mu < 1.0):
        raise ValueError("mu must lie in (0, 1)")
    c = 1.0 / (p * t_c)
    if theta == 0.0:
        bound = t_c / a
        threshold = 0.0

        def settled(v):
            return v <= v_settle
    else:
        bound = t_c / (a * mu)
        threshold = p * t_c * theta / (1.0 - mu)

        def settled(v):
            vv = max(v, 0.0)
            return math.exp(a * vv ** p) * vv ** (1.0 - p) <= threshold

    def f(v):
        vv = max(v, 0.0)
        return -c * math.exp(min(a * vv ** p, GAIN_SAFE_EXP)) * vv ** (1.0 - p) + theta

    v = float(v0)
    t = 0.0
    horizon = 1.05 * bound + 10.0 * dt
    while t <= horizon:
        if settled(v):
            return OracleResult(t, bound, t <= bound, threshold)
        k1 = f(v)
        k2 = f(v + 0.5 * dt * k1)
        k3 = f(v + 0.5 * dt * k2)
        k4 = f(v + dt * k3)
        v = max(v + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0)
        t += dt
    return OracleResult(math.inf, bound, False, threshold)
