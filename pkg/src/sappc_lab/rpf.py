"""Reference performance function (RPF) and time-varying constraint width.

The RPF is the smooth piecewise curve

    rho(t) = (rho_e0 − rho_einf)·exp(−l·t) + rho_einf     0 <= t < t1
           = a1·t² + a2·t + a3                            t1 <= t < t2
           = g_inf                                        t  >= t2

with the junction time t1 and the quadratic coefficients fixed by the four
smoothness constraints

    rho_e(t1) = rho_p(t1),   rho_e'(t1) = rho_p'(t1),
    rho_p(t2) = g_inf,       rho_p'(t2) = 0.

Eliminating a1..a3 leaves a single transcendental junction equation

    f(t1) = E(t1)·[1 − (l/2)(t2 − t1)] − (g_inf − rho_einf) = 0,
    E(t1) = (rho_e0 − rho_einf)·exp(−l·t1),

solved by a dense sign-change scan followed by bisection. The curve's sign
is fixed by the initial error of the axis it constrains; the constraint
half-width delta(t) = B0/|rho(t)| then widens as the curve shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoJunctionRoot

SCAN_POINTS = 200_001          # dense sign-change scan resolution on (0, t2)
EDGE_MARGIN = 1e-6             # seconds kept clear of both interval ends
JUNCTION_TOL = 1e-12           # |f(t1)| acceptance for the bisection
RHO_E0_FLOOR = 0.05            # floor for degenerate initial errors


@dataclass(frozen=True)
class RpfParams:
    """Free parameters of one axis curve; sign = ±1 from the initial error."""

    rho_e0: float
    rho_einf: float
    l: float
    t2: float
    g_inf: float
    sign: float = 1.0

    def __post_init__(self):
        if not (self.rho_e0 > self.rho_einf > 0.0):
            raise ValueError("require rho_e0 > rho_einf > 0")
        if not self.g_inf > self.rho_einf:
            raise ValueError("require g_inf > rho_einf")
        if self.t2 <= 0.0 or self.l <= 0.0:
            raise ValueError("require t2 > 0 and l > 0")
        if self.sign not in (-1.0, 1.0):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def for_initial_error(cls, e0, rho_e0, rho_einf, l, t2, g_inf):
        """Sign from e0; when rho_e0 is None it is |e0| floored at 0.05."""
        sign = 1.0 if e0 >= 0.0 else -1.0
        if rho_e0 is None:
            rho_e0 = max(abs(e0), RHO_E0_FLOOR)
        return cls(rho_e0, rho_einf, l, t2, g_inf, sign)


def _junction(params: RpfParams, t1):
    amp = params.rho_e0 - params.rho_einf
    e = amp * np.exp(-params.l * t1)
    return e * (1.0 - 0.5 * params.l * (params.t2 - t1)) - (
        params.g_inf - params.rho_einf
    )


@dataclass(frozen=True)
class RpfProfile:
    """Solved piecewise curve; evaluation is sign-applied."""

    params: RpfParams
    t1: float = field(init=False)
    a1: float = field(init=False)
    a2: float = field(init=False)
    a3: float = field(init=False)

    def __post_init__(self):
        t1 = _solve_junction(self.params)
        p = self.params
        e1 = (p.rho_e0 - p.rho_einf) * math.exp(-p.l * t1)
        a1 = p.l * e1 / (2.0 * (p.t2 - t1))
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", -2.0 * a1 * p.t2)
        object.__setattr__(self, "a3", p.g_inf + a1 * p.t2 * p.t2)

    def value_rate(self, t):
        """(rho, rho_dot) at time t, sign applied, branchwise."""
        p = self.params
        if t < self.t1:
            e = (p.rho_e0 - p.rho_einf) * math.exp(-p.l * t)
            v, dv = e + p.rho_einf, -p.l * e
        elif t < p.t2:
            # vertex form a1 (t − t2)² + g_inf matches the stored a1..a3
            dt = t - p.t2
            v, dv = self.a1 * dt * dt + p.g_inf, 2.0 * self.a1 * dt
        else:
            v, dv = p.g_inf, 0.0
        return p.sign * v, p.sign * dv


def _solve_junction(params: RpfParams):
    """Dense scan for the first sign change, then bisection to |f| <= 1e-12."""
    t2 = params.t2
    grid = np.linspace(EDGE_MARGIN, t2 - EDGE_MARGIN, SCAN_POINTS)
    f = _junction(params, grid)
    sign_flip = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    exact = np.nonzero(f == 0.0)[0]
    if exact.size and (not sign_flip.size or exact[0] <= sign_flip[0]):
        return float(grid[exact[0]])
    if not sign_flip.size:
        raise NoJunctionRoot(
            "junction equation has no sign change on (0, t2); "
            f"parameter set {params} is infeasible"
        )
    lo = float(grid[sign_flip[0]])
    hi = float(grid[sign_flip[0] + 1])
    flo = float(_junction(params, lo))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = float(_junction(params, mid))
        if abs(fm) <= JUNCTION_TOL:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_profile(params: RpfParams) -> RpfProfile:
    """Construct the solved profile; raises NoJunctionRoot when infeasible."""
    return RpfProfile(params)


def rho_at(profile: RpfProfile, t):
    """(value, derivative) of the signed curve at time t >= 0."""
    return profile.value_rate(t)


@dataclass(frozen=True)
class ConstraintParams:
    """Constraint scale B0 for delta(t) = B0/|rho(t)|."""

    b0: float

    def __post_init__(self):
        if self.b0 <= 0.0:
            raise ValueError("require b0 > 0")


def delta_at(profile: RpfProfile, c: ConstraintParams, t):
    """(delta, delta_dot) of the constraint half-width at time t.

    delta = B0/|rho| is non-decreasing because |rho| never increases.
    """
    rho, rho_dot = profile.value_rate(t)
    mag = abs(rho)
    delta = c.b0 / mag
    sign = 1.0 if rho >= 0.0 else -1.0
    delta_dot = -c.b0 * sign * rho_dot / (rho * rho)
    return delta, delta_dot
