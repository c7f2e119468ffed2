"""Attitude error kinematics/dynamics, disturbance and actuator models.

Conventions
-----------
* Quaternions follow the Hamilton convention. Internally they are
  scalar-first ``(w, x, y, z)``; file I/O (configs, CSV) is scalar-last
  ``[x, y, z, w]``.
* The error quaternion is ``q_e = q_d⁻¹ ⊗ q_s`` and is constructed with a
  non-negative scalar part at t = 0.
* ``omega_e`` is the body rate error expressed in the current body frame;
  the full body rate is reconstructed as ``omega_s = omega_e + C_e omega_d``.

The rigid-body error system is

    q̇_ev = Γ(q_e) ω_e
    q̇_e0 = −½ q_evᵀ ω_e
    J ω̇_e = J ω_e^× C_e ω_d − J C_e ω̇_d − ω_s^× J ω_s + u + d

with C_e = (q_e0² − q_evᵀq_ev)I + 2 q_ev q_evᵀ − 2 q_e0 q_ev^× and
Γ = ½(q_e0 I + q_ev^×), which is singular exactly at q_e0 = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import quat
from .errors import SingularJacobian

JACOBIAN_SINGULARITY_TOL = 1e-6


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion split into scalar part ``w`` and vector part ``v``."""

    w: float
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        n = math.sqrt(self.w * self.w + float(v @ v))
        if abs(n - 1.0) > 1e-9:
            object.__setattr__(self, "w", self.w / n)
            v = v / n
        object.__setattr__(self, "v", v)

    @classmethod
    def identity(cls):
        return cls(1.0, np.zeros(3))

    @classmethod
    def from_wxyz(cls, arr):
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0]), arr[1:4].copy())

    @classmethod
    def from_xyzw(cls, arr):
        """Scalar-last I/O layout ``[x, y, z, w]``."""
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[3]), arr[0:3].copy())

    def as_wxyz(self):
        return np.concatenate(([self.w], self.v))

    def as_xyzw(self):
        return np.concatenate((self.v, [self.w]))

    def as_tuple(self):
        return (self.w, float(self.v[0]), float(self.v[1]), float(self.v[2]))


@dataclass
class ErrorState:
    """Attitude error pair (q_e, omega_e)."""

    q_e: UnitQuaternion
    omega_e: np.ndarray

    def __post_init__(self):
        self.omega_e = np.asarray(self.omega_e, dtype=float)
        if not np.all(np.isfinite(self.omega_e)):
            raise ValueError("omega_e must be finite")


@dataclass
class Inertia:
    """Symmetric positive-definite inertia matrix with cached eigen extremes."""

    J: np.ndarray
    j_min: float = field(init=False)
    j_max: float = field(init=False)

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if J.shape != (3, 3):
            raise ValueError("inertia matrix must be 3x3")
        if np.abs(J - J.T).max() > 1e-12:
            raise ValueError("inertia matrix must be symmetric")
        eigs = np.linalg.eigvalsh(J)
        if eigs.min() <= 0.0:
            raise ValueError("inertia matrix must be positive definite")
        self.J = J
        self.j_min = float(eigs.min())
        self.j_max = float(eigs.max())
        # cached tuple forms for the scalar hot path
        self._rows = tuple(tuple(float(x) for x in row) for row in J)
        self._inv_rows = tuple(
            tuple(float(x) for x in row) for row in np.linalg.inv(J)
        )

    def rows(self):
        return self._rows

    def inv_rows(self):
        return self._inv_rows


@dataclass
class ReferenceTrajectory:
    """Desired attitude: initial quaternion plus body-frame rate profile."""

    q_d0: UnitQuaternion
    omega_d: Callable[[float], tuple]
    omega_d_dot: Callable[[float], tuple]


@dataclass
class DisturbanceAxis:
    sin_amp: float
    sin_mult: float
    cos_amp: float
    cos_mult: float
    offset: float


@dataclass
class Pulse:
    onset: float
    duration: float
    amplitude: tuple


@dataclass
class DisturbanceModel:
    """Periodic nine-coefficient torque model plus an optional pulse.

    Per axis: d_i = scale·(A sin(a ω_p t) + B cos(b ω_p t) + C); the pulse
    amplitude is added on [onset, onset + duration).
    """

    axes: tuple
    scale: float = 0.001
    omega_p: float = 0.01
    bound: float = 0.06
    pulse: Optional[Pulse] = None


@dataclass
class ActuatorLimits:
    """Per-axis saturation and deadzone thresholds."""

    u_max: float = 0.5
    u_min: float = 0.005

    def __post_init__(self):
        if not (0.0 <= self.u_min < self.u_max):
            raise ValueError("require 0 <= u_min < u_max")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def quat_multiply(a: UnitQuaternion, b: UnitQuaternion) -> UnitQuaternion:
    """Hamilton product a ⊗ b, renormalized."""
    w, x, y, z = quat.q_normalize(quat.q_mul(a.as_tuple(), b.as_tuple()))
    return UnitQuaternion(w, np.array([x, y, z]))


def quat_conjugate(q: UnitQuaternion) -> UnitQuaternion:
    return UnitQuaternion(q.w, -q.v)


def error_quaternion(q_s: UnitQuaternion, q_d: UnitQuaternion) -> UnitQuaternion:
    """Attitude error q_e = q_d⁻¹ ⊗ q_s with w >= 0 enforced at construction."""
    w, x, y, z = quat.q_normalize(
        quat.q_mul(quat.q_conj(q_d.as_tuple()), q_s.as_tuple())
    )
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    return UnitQuaternion(w, np.array([x, y, z]))


def rotation_matrix(q_e: UnitQuaternion) -> np.ndarray:
    """C_e = (q_e0² − q_evᵀq_ev)I + 2 q_ev q_evᵀ − 2 q_e0 q_ev^×."""
    return np.array(quat.q_rotmat(q_e.as_tuple()))


def jacobian(q_e: UnitQuaternion) -> np.ndarray:
    """Γ(q_e) = ½(q_e0 I + q_ev^×); det(2Γ) = q_e0 for a unit quaternion."""
    w = q_e.w
    x, y, z = q_e.v
    return 0.5 * np.array([[w, -z, y], [z, w, -x], [-y, x, w]])


def jacobian_inverse(q_e: UnitQuaternion) -> np.ndarray:
    """Γ⁻¹; raises SingularJacobian when |q_e0| < 1e-6."""
    w = q_e.w
    if abs(w) < JACOBIAN_SINGULARITY_TOL:
        raise SingularJacobian(f"q_e0 = {w:.2e} is within {JACOBIAN_SINGULARITY_TOL} of zero")
    v = q_e.v
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return (2.0 / w) * (w * w * np.eye(3) - w * vx + np.outer(v, v))


def disturbance_at(model: DisturbanceModel, t: float) -> tuple:
    """Disturbance torque at time t (tuple for the hot path)."""
    wp = model.omega_p
    s = model.scale
    d = []
    for ax in model.axes:
        d.append(
            s
            * (
                ax.sin_amp * math.sin(ax.sin_mult * wp * t)
                + ax.cos_amp * math.cos(ax.cos_mult * wp * t)
                + ax.offset
            )
        )
    p = model.pulse
    if p is not None and p.onset <= t < p.onset + p.duration:
        d[0] += p.amplitude[0]
        d[1] += p.amplitude[1]
        d[2] += p.amplitude[2]
    return (d[0], d[1], d[2])


def apply_actuator(u_cmd, limits: ActuatorLimits):
    """Clamp per axis to ±u_max and zero magnitudes below u_min."""
    out = []
    for ui in u_cmd:
        if ui > limits.u_max:
            ui = limits.u_max
        elif ui < -limits.u_max:
            ui = -limits.u_max
        if abs(ui) < limits.u_min:
            ui = 0.0
        out.append(ui)
    return (out[0], out[1], out[2])


def error_dynamics_scalar(q_e, omega_e, inertia: Inertia, omega_d, omega_d_dot, u, d):
    """Time derivative of (q_e, omega_e) in scalar-tuple form.

    q_e is a (w, x, y, z) tuple, all vectors are 3-tuples. Pure function;
    this is the form the fixed-step integrator consumes.
    """
    J = inertia.rows()
    Jinv = inertia.inv_rows()
    Ce = quat.q_rotmat(q_e)
    ce_wd = quat.m_vec(Ce, omega_d)
    ce_wdd = quat.m_vec(Ce, omega_d_dot)
    omega_s = quat.v_add(omega_e, ce_wd)
    j_ws = quat.m_vec(J, omega_s)
    torque = quat.v_add(
        quat.v_sub(
            quat.m_vec(J, quat.v_cross(omega_e, ce_wd)),
            quat.v_add(quat.m_vec(J, ce_wdd), quat.v_cross(omega_s, j_ws)),
        ),
        quat.v_add(u, d),
    )
    return quat.q_kinematics(q_e, omega_e), quat.m_vec(Jinv, torque)


def error_dynamics(
    state: ErrorState,
    ref: ReferenceTrajectory,
    inertia: Inertia,
    u,
    d,
    t: float,
):
    """Numpy-facing wrapper around :func:`error_dynamics_scalar`."""
    q_dot, w_dot = error_dynamics_scalar(
        state.q_e.as_tuple(),
        tuple(state.omega_e),
        inertia,
        ref.omega_d(t),
        ref.omega_d_dot(t),
        tuple(np.asarray(u, dtype=float)),
        tuple(np.asarray(d, dtype=float)),
    )
    return np.array(q_dot), np.array(w_dot)
