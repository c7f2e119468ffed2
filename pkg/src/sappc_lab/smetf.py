"""Shear-mapping error transformation: globally defined per-axis transform.

The base transform is the tangent map R(z0) = tan(π/(2δ)·(z0 − 1)),
defined on the open branch z0 ∈ (1 − δ, 1 + δ). Composing it with a planar
shear of angle θ tilts its vertical asymptotes, so the composed map

    z0 + R(z0)·tanθ = z_s

has exactly one solution z0 on the branch for every real z_s: the
left-hand side is strictly increasing and spans (−∞, +∞). The translated
error ε_s = R(z0) therefore exists for any normalized error z_s = e/ρ,
which is the singularity-avoidance property.

The transform's sensitivities feed the controller:

    P0 = (π/2δ)(ε_s² + 1)            dε/dz0
    P_s = P0/(1 + P0 tanθ)           dε/dz_s at fixed δ
    ψ = P_s/ρ,   η = −ρ̇/ρ,          ξ = −P_s (z0 − 1) δ̇ / δ

giving dε/dt = ψ(ė + ηe) + ξ. ξ always opposes ε while the constraint
widens (ε·ξ <= 0), which is what lets the control law ignore it.

The δ-sensitivity includes the same 1/(1 + P0 tanθ) shear factor as P_s:
at fixed z_s the pre-shear image z0 moves when δ moves, so
∂ε/∂δ = [∂ε0/∂δ at fixed z0]/(1 + P0 tanθ) = −P_s(z0 − 1)/δ. Dropping
the factor (differentiating at fixed z0 only) leaves the sign intact but
fails a finite-difference check of the full dε/dt chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BranchViolation, ConvergenceFailure

NEWTON_BUDGET = 100
BRANCH_MARGIN = 1e-12          # fraction of delta kept clear of branch ends
RESIDUAL_TOL = 1e-12           # scaled by (1 + |z_s|)
EPS_SATURATION = 1e12          # IEEE overflow guard near branch edges


@dataclass(frozen=True)
class ShearParams:
    """Shear angle theta in (0, π/2) with its cached tangent."""

    theta: float
    tan_theta: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.theta < math.pi / 2):
            raise ValueError("theta must lie in (0, pi/2)")
        object.__setattr__(self, "tan_theta", math.tan(self.theta))

    @classmethod
    def from_degrees(cls, deg):
        return cls(math.radians(deg))


@dataclass(frozen=True)
class AxisTransform:
    """One axis of the transform with all controller-facing sensitivities."""

    z_s: float
    z_0: float
    eps_s: float
    p_s: float
    psi: float
    eta: float
    xi: float


def shear_points(x0, y0, shear: ShearParams):
    """Forward shear: (x0, y0) ↦ (x0 + y0·tanθ, y0)."""
    return (x0 + y0 * shear.tan_theta, y0)


def base_transform(z0, delta):
    """ε = tan(π/(2δ)(z0 − 1)) on the open branch (1−δ, 1+δ)."""
    y = (z0 - 1.0) / delta
    if not (-1.0 < y < 1.0):
        raise BranchViolation(
            f"z0 = {z0} outside the open branch (1−δ, 1+δ) for delta = {delta}"
        )
    return math.tan(0.5 * math.pi * y)


def solve_z0(z_s, delta, shear: ShearParams, y_guess=0.0):
    """Unique pre-shear image z0 of z_s; returns (z0, eps_s).

    Solves G(y) = 1 + δy + tan(πy/2)·tanθ − z_s = 0 in the normalized
    coordinate y = (z0 − 1)/δ with a safeguarded Newton iteration
    (analytic slope δ + (π/2)(ε²+1)tanθ, bisection fallback inside the
    bracket). Far outside the constraint band the root sits so close to a
    tangent pole that G's slope reaches ~1/eps of the target tolerance;
    when the bracket collapses to adjacent floats the midpoint is the
    representable optimum and is returned as such (the residual is then
    slope-limited, a few ULPs of z_s, rather than 1e-12 absolute). The
    iteration budget signals numerical pathology only; a root always
    exists.
    """
    tan_theta = shear.tan_theta
    bound = 1.0 - BRANCH_MARGIN
    lo, hi = -bound, bound
    tol = RESIDUAL_TOL * (1.0 + abs(z_s))
    y = y_guess if lo < y_guess < hi else 0.0
    eps = math.tan(0.5 * math.pi * y)
    g_lo_negative = True  # G(lo) = 2−δ·bound−tan(...)·tanθ−z_s → −inf side
    for _ in range(NEWTON_BUDGET):
        g = 1.0 + delta * y + eps * tan_theta - z_s
        if abs(g) <= tol:
            return 1.0 + delta * y, eps
        if (g < 0.0) == g_lo_negative:
            lo = y
        else:
            hi = y
        if hi - lo <= 5e-16:
            # bracket collapsed: y is the float-resolution optimum
            return 1.0 + delta * y, eps
        slope = delta + 0.5 * math.pi * (eps * eps + 1.0) * tan_theta
        y_new = y - g / slope
        if not (lo < y_new < hi) or y_new == y:
            y_new = 0.5 * (lo + hi)
        y = y_new
        eps = math.tan(0.5 * math.pi * y)
    raise ConvergenceFailure(
        f"solve_z0 failed to converge for z_s={z_s}, delta={delta}"
    )


def transform_axis(e, rho, rho_dot, delta, delta_dot, shear: ShearParams,
                   y_guess=0.0) -> AxisTransform:
    """Full per-axis transform of the error e against the curve (rho, delta)."""
    z_s = e / rho
    z0, eps = solve_z0(z_s, delta, shear, y_guess)
    if eps > EPS_SATURATION:
        eps = EPS_SATURATION
    elif eps < -EPS_SATURATION:
        eps = -EPS_SATURATION
    e2p1 = eps * eps + 1.0
    p_s = math.pi * e2p1 / (math.pi * e2p1 * shear.tan_theta + 2.0 * delta)
    psi = p_s / rho
    eta = -rho_dot / rho
    xi = -p_s * (z0 - 1.0) * delta_dot / delta
    return AxisTransform(z_s, z0, eps, p_s, psi, eta, xi)
