"""Backstepping attitude controllers.

Three controllers share the same two-layer structure (attitude layer
producing a virtual rate command, rate layer producing torque, first-order
dynamic-surface filter in between):

* ``SappcController``: the singularity-avoidance scheme, a shear-mapped
  tangent transform against the piecewise reference performance function
  with predefined-time gain shaping on every layer.
* ``TrappcController``: traditional prescribed-performance benchmark, a
  logarithmic homeomorphic transform on a belt domain z in (-K, 1) with
  the same backstepping layers. Leaving the belt raises DomainViolation.
* ``BlfppcController``: barrier-Lyapunov benchmark with a finite-time
  performance funnel (upper bound FTPPF, lower bound 0), linear layers
  plus a barrier torque whose direction reverses outside the funnel (the
  stuck-state failure mode, deliberately not masked).

The predefined-time gain is M(v) = (1/(2pT))·e^{v^p}·v^{−p} evaluated on
v' = max(v, v_floor); the virtual command is clamped per axis so the
torque-saturated plant can follow it (without the clamp, the exponential
gain turns actuator saturation into a sustained limit cycle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import quat
from .attitude import JACOBIAN_SINGULARITY_TOL, Inertia
from .errors import DomainViolation, SingularJacobian
from .rpf import ConstraintParams, RpfProfile
from .smetf import ShearParams, transform_axis

GAIN_EXP_CLAMP = 700.0  # e^x overflow guard; M stays finite for any v


# ---------------------------------------------------------------------------
# gain shaping and shared layers
# ---------------------------------------------------------------------------

def gain_matrix(v, p, t_c, floor=1e-12):
    """Predefined-time diagonal gain M(v) = e^{v'^p}·v'^{−p}/(2pT)."""
    vp = v if v > floor else floor
    ex = vp ** p
    if ex > GAIN_EXP_CLAMP:
        ex = GAIN_EXP_CLAMP
    return math.exp(ex) / (2.0 * p * t_c * vp ** p)


@dataclass(frozen=True)
class SappcGains:
    """Gains of the two backstepping layers and the surface filter."""

    k_q: float = 0.6
    k_omega: float = 8.0
    p: float = 0.1
    t1_gain: float = 3.0
    t2_gain: float = 3.0
    t3_gain: float = 2.0
    mu: tuple = (2e-4, 2e-4, 2e-4)
    d_m: float = 0.06
    v_floor: float = 1e-12
    alpha_max: float = 0.15      # rad/s per-axis virtual-rate clamp

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError("p must lie in (0, 1)")
        if self.p * self.t3_gain >= 1.0:
            raise ValueError("p * t3_gain must be < 1")
        for name in ("k_q", "k_omega", "t1_gain", "t2_gain", "t3_gain",
                     "d_m", "v_floor", "alpha_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if len(self.mu) != 3 or any(m <= 0.0 for m in self.mu):
            raise ValueError("mu must be three positive constants")


@dataclass
class ControllerState:
    """Backstepping internals exposed for logging."""

    s_d: tuple = (0.0, 0.0, 0.0)
    alpha: tuple = (0.0, 0.0, 0.0)
    z2: tuple = (0.0, 0.0, 0.0)
    h_d: tuple = (0.0, 0.0, 0.0)
    v1: float = 0.0
    v2: float = 0.0
    v3: float = 0.0


@dataclass
class StepDiagnostics:
    """Per-step signals destined for the trajectory log."""

    rho: tuple
    delta: tuple
    z_s: tuple
    eps: tuple
    v1: float
    v2: float
    v3: float


PARK_RATE = 5e-3  # rad-equivalent/s of feedback authority kept near the curve


def brake_limit(gap, accel):
    """Parabolic braking profile: the largest approach rate the saturated
    plant can still cancel over the remaining gap, plus a parking floor."""
    return PARK_RATE + math.sqrt(2.0 * accel * gap) if gap > 0.0 else PARK_RATE


def virtual_control(q_e_tuple, eps, psi, eta, gains: SappcGains, brake=None):
    """Virtual rate law α = Γ⁻¹[−ψ⁻¹ M_q K_q ε − η q_ev], clamped per axis.

    ``brake`` is an optional (accel, gaps) pair: the error-feedback term of
    each axis is then capped by the braking profile so the torque-limited
    plant can decelerate before crossing the reference curve (without it,
    the exponential gain shaping turns actuator saturation into a
    persistent crossing limit cycle). The feedback term equals the
    commanded rate of the deviation itself, so the cap is applied before
    the Γ⁻¹ map. Raises SingularJacobian when the scalar part is ~ 0.
    """
    if abs(q_e_tuple[0]) < JACOBIAN_SINGULARITY_TOL:
        raise SingularJacobian(
            f"q_e0 = {q_e_tuple[0]:.2e} too close to zero for the inverse map"
        )
    v1 = 0.5 * (eps[0] * eps[0] + eps[1] * eps[1] + eps[2] * eps[2])
    m_q = gain_matrix(v1, gains.p, gains.t1_gain, gains.v_floor)
    mk = m_q * gains.k_q
    q_ev = (q_e_tuple[1], q_e_tuple[2], q_e_tuple[3])
    fb = [-mk * eps[i] / psi[i] for i in range(3)]
    if brake is not None:
        accel, gaps = brake
        for i in range(3):
            lim = brake_limit(gaps[i], accel)
            if fb[i] > lim:
                fb[i] = lim
            elif fb[i] < -lim:
                fb[i] = -lim
    arg = (
        fb[0] - eta[0] * q_ev[0],
        fb[1] - eta[1] * q_ev[1],
        fb[2] - eta[2] * q_ev[2],
    )
    a = quat.gamma_inv_apply(q_e_tuple, arg)
    am = gains.alpha_max
    alpha = (
        am if a[0] > am else (-am if a[0] < -am else a[0]),
        am if a[1] > am else (-am if a[1] < -am else a[1]),
        am if a[2] > am else (-am if a[2] < -am else a[2]),
    )
    return alpha, v1


def dsc_filter_rate(h_d, gains: SappcGains):
    """Surface filter Ṡ_d = −M(V₃)·H_d with V₃ = ½‖H_d‖²."""
    v3 = 0.5 * (h_d[0] * h_d[0] + h_d[1] * h_d[1] + h_d[2] * h_d[2])
    m3 = gain_matrix(v3, gains.p, gains.t3_gain, gains.v_floor)
    return (-m3 * h_d[0], -m3 * h_d[1], -m3 * h_d[2]), v3


def dynamics_feedforward(q_e_tuple, omega_e, inertia: Inertia,
                         omega_d, omega_d_dot):
    """W₀ = J ω_e^× C_e ω_d − J C_e ω̇_d − ω_s^× J ω_s."""
    J = inertia.rows()
    ce = quat.q_rotmat(q_e_tuple)
    ce_wd = quat.m_vec(ce, omega_d)
    ce_wdd = quat.m_vec(ce, omega_d_dot)
    omega_s = quat.v_add(omega_e, ce_wd)
    return quat.v_sub(
        quat.m_vec(J, quat.v_cross(omega_e, ce_wd)),
        quat.v_add(quat.m_vec(J, ce_wdd),
                   quat.v_cross(omega_s, quat.m_vec(J, omega_s))),
    )


def control_law(omega_e, s_d, s_d_dot, w0, inertia: Inertia, gains: SappcGains):
    """Torque u = −W₀ + J Ṡ_d − D_m tanh(z₂/μ) − M_ω K_ω J z₂."""
    J = inertia.rows()
    z2 = quat.v_sub(omega_e, s_d)
    jz2 = quat.m_vec(J, z2)
    v2 = 0.5 * quat.v_dot(z2, jz2)
    mw = gain_matrix(v2, gains.p, gains.t2_gain, gains.v_floor) * gains.k_omega
    j_sdot = quat.m_vec(J, s_d_dot)
    dm = gains.d_m
    mu = gains.mu
    u = (
        -w0[0] + j_sdot[0] - dm * math.tanh(z2[0] / mu[0]) - mw * jz2[0],
        -w0[1] + j_sdot[1] - dm * math.tanh(z2[1] / mu[1]) - mw * jz2[1],
        -w0[2] + j_sdot[2] - dm * math.tanh(z2[2] / mu[2]) - mw * jz2[2],
    )
    return u, z2, v2


class _FilteredBackstepping:
    """Shared surface-filter state handling for all three controllers."""

    BRAKE_MARGIN = 0.5   # fraction of saturated authority assumed available

    def __init__(self, gains: SappcGains, inertia: Inertia, u_max=0.5):
        self.gains = gains
        self.inertia = inertia
        self.state = ControllerState()
        self._initialized = False
        # deviation-rate deceleration the saturated actuator can deliver
        self.brake_accel = self.BRAKE_MARGIN * u_max / (2.0 * inertia.j_max)

    def _filter_and_torque(self, q_e, omega_e, alpha, v1, omega_d, omega_d_dot):
        if not self._initialized:
            # S_d(0) = α(0) avoids an artificial filter transient
            self.state.s_d = alpha
            self._initialized = True
        h_d = quat.v_sub(self.state.s_d, alpha)
        s_d_dot, v3 = dsc_filter_rate(h_d, self.gains)
        w0 = dynamics_feedforward(q_e, omega_e, self.inertia,
                                  omega_d, omega_d_dot)
        u, z2, v2 = control_law(omega_e, self.state.s_d, s_d_dot, w0,
                                self.inertia, self.gains)
        st = self.state
        st.alpha, st.h_d, st.z2 = alpha, h_d, z2
        st.v1, st.v2, st.v3 = v1, v2, v3
        return u, s_d_dot

    def _advance_filter(self, s_d_dot, dt):
        # rate from the pre-integration H_d, then explicit Euler update
        s = self.state.s_d
        self.state.s_d = (
            s[0] + dt * s_d_dot[0],
            s[1] + dt * s_d_dot[1],
            s[2] + dt * s_d_dot[2],
        )


# ---------------------------------------------------------------------------
# SAPPC
# ---------------------------------------------------------------------------

class SappcController(_FilteredBackstepping):
    """Shear-mapped prescribed-performance backstepping controller."""

    def __init__(self, profiles, constraint: ConstraintParams,
                 shear: ShearParams, gains: SappcGains, inertia: Inertia,
                 u_max=0.5):
        super().__init__(gains, inertia, u_max)
        if len(profiles) != 3:
            raise ValueError("one RpfProfile per axis required")
        self.profiles = tuple(profiles)
        self.constraint = constraint
        self.shear = shear
        self._y_warm = [0.0, 0.0, 0.0]

    def step(self, q_e, omega_e, t, dt, omega_d, omega_d_dot):
        """One control period; returns (u_cmd, StepDiagnostics)."""
        b0 = self.constraint.b0
        rho = [0.0] * 3
        delta = [0.0] * 3
        z_s = [0.0] * 3
        eps = [0.0] * 3
        psi = [0.0] * 3
        eta = [0.0] * 3
        for i in range(3):
            r, rdot = self.profiles[i].value_rate(t)
            mag = abs(r)
            dl = b0 / mag
            sgn = 1.0 if r >= 0.0 else -1.0
            dldot = -b0 * sgn * rdot / (r * r)
            tr = transform_axis(q_e[1 + i], r, rdot, dl, dldot, self.shear,
                                self._y_warm[i])
            self._y_warm[i] = (tr.z_0 - 1.0) / dl
            rho[i], delta[i], z_s[i], eps[i] = r, dl, tr.z_s, tr.eps_s
            psi[i], eta[i] = tr.psi, tr.eta
        gaps = tuple(max(abs(q_e[1 + i] - rho[i]) - b0, 0.0) for i in range(3))
        alpha, v1 = virtual_control(q_e, eps, psi, eta, self.gains,
                                    (self.brake_accel, gaps))
        u, s_d_dot = self._filter_and_torque(q_e, omega_e, alpha, v1,
                                             omega_d, omega_d_dot)
        self._advance_filter(s_d_dot, dt)
        st = self.state
        diag = StepDiagnostics(tuple(rho), tuple(delta), tuple(z_s),
                               tuple(eps), st.v1, st.v2, st.v3)
        return u, diag


# ---------------------------------------------------------------------------
# TraPPC benchmark
# ---------------------------------------------------------------------------

def trappc_transform(z_s, k_const):
    """Homeomorphic transform ε = ln((K + z)/(K(1 − z))) on z ∈ (−K, 1)."""
    if not (-k_const < z_s < 1.0):
        raise DomainViolation(
            f"z_s = {z_s} outside the transform domain (-{k_const}, 1)"
        )
    return math.log((k_const + z_s) / (k_const * (1.0 - z_s)))


def trappc_slope(z_s, k_const):
    """dε/dz of the homeomorphic transform (positive on the domain)."""
    return 1.0 / (k_const + z_s) + 1.0 / (1.0 - z_s)


@dataclass(frozen=True)
class TrappcParams:
    """Exponential performance funnel and belt constant of the benchmark."""

    k_const: float = 0.3
    rho_e0: float = 2.0
    rho_einf: float = 2e-3
    l: float = 0.3

    def __post_init__(self):
        if not (0.0 < self.k_const < 1.0):
            raise ValueError("k_const must lie in (0, 1)")
        if not (self.rho_e0 > self.rho_einf > 0.0) or self.l <= 0.0:
            raise ValueError("require rho_e0 > rho_einf > 0 and l > 0")


class TrappcController(_FilteredBackstepping):
    """Traditional PPC benchmark; same layers, log-type transform."""

    def __init__(self, params: TrappcParams, signs, gains: SappcGains,
                 inertia: Inertia, u_max=0.5):
        super().__init__(gains, inertia, u_max)
        self.params = params
        self.signs = tuple(signs)

    def funnel(self, t):
        p = self.params
        e = (p.rho_e0 - p.rho_einf) * math.exp(-p.l * t)
        return e + p.rho_einf, -p.l * e

    def step(self, q_e, omega_e, t, dt, omega_d, omega_d_dot):
        p = self.params
        mag, mag_dot = self.funnel(t)
        rho = [0.0] * 3
        delta = [0.0] * 3
        z_s = [0.0] * 3
        eps = [0.0] * 3
        psi = [0.0] * 3
        eta = [0.0] * 3
        half = 0.5 * (1.0 - p.k_const)       # belt center as a fraction of rho
        width = (1.0 + p.k_const) / (1.0 - p.k_const)
        for i in range(3):
            r = self.signs[i] * mag
            rdot = self.signs[i] * mag_dot
            z = q_e[1 + i] / r
            ei = trappc_transform(z, p.k_const)
            # log the belt in center form: tube == z_c in (1−δ, 1+δ)
            rho[i], delta[i] = r * half, width
            z_s[i] = q_e[1 + i] / rho[i]
            eps[i] = ei
            psi[i] = trappc_slope(z, p.k_const) / r
            eta[i] = -rdot / r
        gaps = tuple(abs(q_e[1 + i] - rho[i]) for i in range(3))
        alpha, v1 = virtual_control(q_e, eps, psi, eta, self.gains,
                                    (self.brake_accel, gaps))
        u, s_d_dot = self._filter_and_torque(q_e, omega_e, alpha, v1,
                                             omega_d, omega_d_dot)
        self._advance_filter(s_d_dot, dt)
        st = self.state
        diag = StepDiagnostics(tuple(rho), tuple(delta), tuple(z_s),
                               tuple(eps), st.v1, st.v2, st.v3)
        return u, diag


# ---------------------------------------------------------------------------
# BLFPPC benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FtppfParams:
    """Finite-time performance funnel ρ(t) = (ρ₀^m − mλt)^{1/m} + ρ_Tf."""

    rho_0: float
    m: float
    lam: float
    rho_tf: float
    t_f: float

    def __post_init__(self):
        if self.rho_0 <= 0.0 or self.rho_tf <= 0.0 or self.t_f <= 0.0:
            raise ValueError("rho_0, rho_tf and t_f must be > 0")
        if not (0.0 < self.m < 1.0):
            raise ValueError("m must lie in (0, 1)")
        frac = Fraction(self.m).limit_denominator(64)
        if frac.numerator % 2 != 1 or frac.denominator % 2 != 0:
            raise ValueError("m must be an odd/even integer ratio")
        if abs(self.m * self.lam * self.t_f - self.rho_0 ** self.m) > 1e-9:
            raise ValueError("require m*lam*t_f = rho_0^m")

    @classmethod
    def design(cls, rho_init, rho_tf, t_f, m=0.5):
        """Fix λ from the landing condition m·λ·T_f = ρ₀^m."""
        rho_0 = rho_init - rho_tf
        lam = rho_0 ** m / (m * t_f)
        return cls(rho_0, m, lam, rho_tf, t_f)


def ftppf_at(params: FtppfParams, t):
    """(value, derivative) of the funnel; constant ρ_Tf for t >= T_f."""
    if t < params.t_f:
        base = params.rho_0 ** params.m - params.m * params.lam * t
        value = base ** (1.0 / params.m) + params.rho_tf
        deriv = -params.lam * base ** (1.0 / params.m - 1.0)
        return value, deriv
    return params.rho_tf, 0.0


@dataclass(frozen=True)
class BlfGains:
    k1: float = 10.0
    k2: float = 8.0
    k3: float = 0.01
    mu: tuple = (2e-4, 2e-4, 2e-4)
    d_m: float = 0.06
    alpha_max: float = 0.15

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "d_m", "alpha_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")


class BlfppcController(_FilteredBackstepping):
    """Barrier-Lyapunov benchmark with upper funnel FTPPF, lower bound 0.

    ε_q = (2e − (ρ_u + ρ_l))/(ρ_u − ρ_l) is evaluated even when |ε_q| > 1
    (D_ρ then flips sign), so the post-disturbance stuck state is
    reproduced rather than masked.
    """

    def __init__(self, ftppf: FtppfParams, signs, gains: BlfGains,
                 inertia: Inertia, filter_gains: SappcGains, u_max=0.5):
        super().__init__(filter_gains, inertia, u_max)
        self.ftppf = ftppf
        self.signs = tuple(signs)
        self.blf = gains

    def step(self, q_e, omega_e, t, dt, omega_d, omega_d_dot):
        if abs(q_e[0]) < JACOBIAN_SINGULARITY_TOL:
            raise SingularJacobian(
                f"q_e0 = {q_e[0]:.2e} too close to zero for the inverse map"
            )
        g = self.blf
        mag, mag_dot = ftppf_at(self.ftppf, t)
        rho_u = [self.signs[i] * mag for i in range(3)]
        rho_u_dot = [self.signs[i] * mag_dot for i in range(3)]
        eps = [0.0] * 3
        arg = [0.0] * 3
        for i in range(3):
            e = q_e[1 + i]
            eps[i] = (2.0 * e - rho_u[i]) / rho_u[i]     # rho_l = 0
            s_v = (rho_u_dot[i] / rho_u[i]) * e          # S_b = 0 for rho_l = 0
            arg[i] = -g.k1 * e + 0.5 * g.k1 * rho_u[i] + s_v
        a = quat.gamma_inv_apply(q_e, tuple(arg))
        am = g.alpha_max
        alpha = tuple(am if x > am else (-am if x < -am else x) for x in a)
        v1 = 0.5 * (eps[0] ** 2 + eps[1] ** 2 + eps[2] ** 2)

        if not self._initialized:
            self.state.s_d = alpha
            self._initialized = True
        h_d = quat.v_sub(self.state.s_d, alpha)
        s_d_dot, v3 = dsc_filter_rate(h_d, self.gains)
        w0 = dynamics_feedforward(q_e, omega_e, self.inertia,
                                  omega_d, omega_d_dot)
        J = self.inertia.rows()
        z2 = quat.v_sub(omega_e, self.state.s_d)
        jz2 = quat.m_vec(J, z2)
        v2 = 0.5 * quat.v_dot(z2, jz2)
        j_sdot = quat.m_vec(J, s_d_dot)
        # barrier term: D_rho flips sign outside the funnel (|eps| > 1)
        d_rho_eps = tuple(
            eps[i] / ((1.0 - eps[i] * eps[i]) * rho_u[i]) for i in range(3)
        )
        barrier = quat.gamma_inv_apply(q_e, d_rho_eps)
        u = tuple(
            -g.k2 * jz2[i]
            - 2.0 * g.k3 * barrier[i]
            - w0[i]
            + j_sdot[i]
            - g.d_m * math.tanh(z2[i] / g.mu[i])
            for i in range(3)
        )
        st = self.state
        st.alpha, st.h_d, st.z2 = alpha, h_d, z2
        st.v1, st.v2, st.v3 = v1, v2, v3
        self._advance_filter(s_d_dot, dt)
        # log the funnel in center form: center ρ_u/2, half-width 1
        diag = StepDiagnostics(
            tuple(0.5 * r for r in rho_u),
            (1.0, 1.0, 1.0),
            tuple(q_e[1 + i] / (0.5 * rho_u[i]) for i in range(3)),
            tuple(eps),
            v1, v2, v3,
        )
        return u, diag
