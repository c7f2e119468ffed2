"""Scalar quaternion and 3-vector helpers for the simulation hot path.

Quaternions are tuples ``(w, x, y, z)`` (scalar-first, Hamilton
convention); vectors are tuples ``(x, y, z)``. Everything here is plain
float math so the fixed-step integrator can run thousands of steps per
second without array-allocation overhead. The numpy-facing API lives in
:mod:`sappc_lab.attitude`.
"""

from __future__ import annotations

import math


def v_add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def v_sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def v_scale(a, s):
    return (a[0] * s, a[1] * s, a[2] * s)


def v_dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def v_cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def v_norm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def m_vec(m, v):
    return (
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )


def q_mul(a, b):
    """Hamilton product a ⊗ b (not renormalized)."""
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return (
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    )


def q_conj(q):
    return (q[0], -q[1], -q[2], -q[3])


def q_norm(q):
    return math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])


def q_normalize(q):
    n = q_norm(q)
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def q_rotmat(q):
    """Attitude transformation matrix C(q) = (w² − v·v)I + 2vvᵀ − 2w v^×.

    Maps reference-frame vectors into the rotated body frame.
    """
    w, x, y, z = q
    s = w * w - (x * x + y * y + z * z)
    return (
        (s + 2 * x * x, 2 * (x * y + w * z), 2 * (x * z - w * y)),
        (2 * (x * y - w * z), s + 2 * y * y, 2 * (y * z + w * x)),
        (2 * (x * z + w * y), 2 * (y * z - w * x), s + 2 * z * z),
    )


def q_kinematics(q, omega):
    """Quaternion rate q̇ = ½ q ⊗ (0, ω) for body rates ω."""
    w, x, y, z = q
    ox, oy, oz = omega
    return (
        0.5 * (-x * ox - y * oy - z * oz),
        0.5 * (w * ox + y * oz - z * oy),
        0.5 * (w * oy - x * oz + z * ox),
        0.5 * (w * oz + x * oy - y * ox),
    )


def gamma_apply(q, omega):
    """Vector-part rate Γ(q)·ω = ½(w ω + v × ω)."""
    qd = q_kinematics(q, omega)
    return (qd[1], qd[2], qd[3])


def gamma_inv_apply(q, v):
    """Solve Γ(q)·x = v for a unit quaternion.

    Uses the closed form Γ⁻¹ = (2/w)(w²I − w v_q^× + v_q v_qᵀ); valid only
    while the scalar part w is away from zero.
    """
    w = q[0]
    qv = (q[1], q[2], q[3])
    c = v_cross(qv, v)
    d = v_dot(qv, v)
    return (
        (2.0 / w) * (w * w * v[0] - w * c[0] + qv[0] * d),
        (2.0 / w) * (w * w * v[1] - w * c[1] + qv[1] * d),
        (2.0 / w) * (w * w * v[2] - w * c[2] + qv[2] * d),
    )


def q_from_euler_zyx(yaw, pitch, roll):
    """Unit quaternion from Z-Y-X (yaw, pitch, roll) angles in radians."""
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    qz = (cy, 0.0, 0.0, sy)
    qy = (cp, 0.0, sp, 0.0)
    qx = (cr, sr, 0.0, 0.0)
    return q_mul(q_mul(qz, qy), qx)
