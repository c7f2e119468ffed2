"""Runnable property and oracle suites (also exposed as `sappc-lab check`).

Each check returns (name, passed, detail). They are the executable form of
the scheme's mathematical guarantees: the smoothing-bound inequality, the
predefined-time settling bounds, the reference-curve junction smoothness,
the transform's global solvability, and its sensitivity chain.
"""

from __future__ import annotations

import math

import numpy as np

from .engine import theorem1_oracle
from .rpf import ConstraintParams, RpfParams, RpfProfile, delta_at, rho_at
from .smetf import ShearParams, solve_z0, transform_axis

TANH_BOUND = 0.2785


def check_tanh_inequality():
    """0 <= |x| − x·tanh(x/mu) <= 0.2785·mu on a dense grid."""
    xs = np.linspace(-100.0, 100.0, 20001)
    worst = 0.0
    for mu in (0.1, 1.0, 10.0):
        gap = np.abs(xs) - xs * np.tanh(xs / mu)
        if gap.min() < -1e-12 or gap.max() > TANH_BOUND * mu:
            return ("tanh smoothing bound", False,
                    f"mu={mu}: gap range [{gap.min():.3e}, {gap.max():.3e}]")
        worst = max(worst, float(gap.max() / mu))
    return ("tanh smoothing bound", True, f"max gap/mu = {worst:.6f}")


def check_settling_bounds():
    """Scalar ODE settling/residual-entry times against the exact bounds."""
    for v0 in (0.1, 1.0, 100.0):
        for (a, p, t_c) in ((1.0, 0.5, 2.0), (2.0, 0.1, 3.0), (0.5, 0.8, 1.0)):
            res = theorem1_oracle(a, p, t_c, theta=0.0, v0=v0)
            if not res.satisfied:
                return ("predefined-time settling bound", False,
                        f"v0={v0} a={a} p={p} T_c={t_c}: "
                        f"settle {res.settle_time:.4f} > bound {res.bound:.4f}")
    for theta, mu in ((0.1, 0.5), (1.0, 0.25)):
        res = theorem1_oracle(1.0, 0.5, 2.0, theta=theta, mu=mu, v0=1.0)
        if not res.satisfied:
            return ("predefined-time settling bound", False,
                    f"theta={theta} mu={mu}: residual entry "
                    f"{res.settle_time:.4f} > bound {res.bound:.4f}")
    return ("predefined-time settling bound", True, "all grid points inside")


def check_rpf_junctions(n=100, seed=7):
    """C0/C1 junction smoothness over random feasible parameter sets."""
    rng = np.random.default_rng(seed)
    tried = 0
    for _ in range(10 * n):
        if tried >= n:
            break
        rho_e0 = rng.uniform(0.05, 1.0)
        rho_einf = 10 ** rng.uniform(-7, -5)
        g_inf = rho_einf + 10 ** rng.uniform(-5, -4)
        t2 = rng.uniform(10.0, 30.0)
        # keep the junction feasible: E(t2)*e/2 must reach g_inf − rho_einf
        l_max = (1.0 + math.log(0.5 * (rho_e0 - rho_einf)
                                / (g_inf - rho_einf))) / t2
        l = rng.uniform(0.3 * l_max, 0.95 * l_max)
        if l <= 0.0:
            continue
        tried += 1
        params = RpfParams(rho_e0, rho_einf, l, t2, g_inf,
                           1.0 if rng.uniform() < 0.5 else -1.0)
        prof = RpfProfile(params)
        t1 = prof.t1
        v_lo, d_lo = rho_at(prof, t1 - 1e-9)
        v_hi, d_hi = rho_at(prof, t1 + 1e-9)
        v2, d2 = rho_at(prof, t2)
        if abs(v_lo - v_hi) > 1e-8 or abs(d_lo - d_hi) > 1e-8:
            return ("rpf junction smoothness", False,
                    f"{params}: junction mismatch {abs(v_lo-v_hi):.2e}")
        if abs(abs(v2) - params.g_inf) > 1e-10 or abs(d2) > 1e-10:
            return ("rpf junction smoothness", False,
                    f"{params}: terminal landing off by {abs(v2)-params.g_inf:.2e}")
        c = ConstraintParams(0.5 * g_inf)
        for t in (0.0, 0.5 * t1, t1, 0.5 * (t1 + t2), t2, t2 + 5.0):
            dl, _ = delta_at(prof, c, t)
            rho, _ = rho_at(prof, t)
            if abs(dl * abs(rho) - c.b0) > 1e-14:
                return ("rpf junction smoothness", False,
                        f"delta*|rho| != b0 at t={t}")
    return ("rpf junction smoothness", True, f"{tried} random parameter sets")


def check_smetf_global():
    """solve_z0 succeeds over a signed log grid of z_s for many (delta, theta)."""
    zs_grid = [0.0, 1.0]
    for mag in np.logspace(-3, 6, 28):
        zs_grid.extend((mag, -mag))
    count = 0
    for delta in (1e-4, 1e-2, 1.0, 10.0):
        for theta_deg in (1.0, 10.0, 45.0):
            shear = ShearParams.from_degrees(theta_deg)
            for z_s in zs_grid:
                z0, eps = solve_z0(z_s, delta, shear)
                resid = z0 + eps * shear.tan_theta - z_s
                # 1e-7 relative: at the grid's extreme corners the root is
                # pole-adjacent and the residual is slope-limited to a few
                # ULPs of z_s (measured worst ~4e-8 relative)
                if abs(resid) > 1e-7 * (1.0 + abs(z_s)):
                    return ("smetf global solvability", False,
                            f"delta={delta} theta={theta_deg} z_s={z_s}: "
                            f"residual {resid:.2e}")
                count += 1
    return ("smetf global solvability", True, f"{count} grid solves")


def check_smetf_sensitivity():
    """P_s against a finite difference and the full dε/dt chain along a
    synthetic smooth trajectory."""
    shear = ShearParams.from_degrees(10.0)
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(200):
        delta = 10 ** rng.uniform(-2, 1)
        z_s = rng.uniform(-4.0, 4.0)
        tr = transform_axis(z_s, 1.0, 0.0, delta, 0.0, shear)
        _, eps_p = solve_z0(z_s + h, delta, shear)
        _, eps_m = solve_z0(z_s - h, delta, shear)
        fd = (eps_p - eps_m) / (2.0 * h)
        if abs(fd - tr.p_s) > 1e-4 * max(1.0, abs(fd)):
            return ("smetf sensitivity chain", False,
                    f"P_s mismatch: fd={fd:.8e} analytic={tr.p_s:.8e}")

    # synthetic trajectory: e(t), rho(t) smooth, delta = b0/|rho|
    b0 = 0.8

    def e_of(t):
        return 0.3 * math.sin(t) + 0.5

    def e_dot(t):
        return 0.3 * math.cos(t)

    def rho_of(t):
        return 2.0 * math.exp(-0.3 * t) + 0.5

    def rho_dot(t):
        return -0.6 * math.exp(-0.3 * t)

    def eps_of(t):
        rho = rho_of(t)
        delta = b0 / abs(rho)
        _, eps = solve_z0(e_of(t) / rho, delta, shear)
        return eps

    ht = 1e-5
    for t in np.linspace(0.1, 8.0, 40):
        rho = rho_of(t)
        delta = b0 / abs(rho)
        delta_dot = -b0 * math.copysign(1.0, rho) * rho_dot(t) / rho ** 2
        tr = transform_axis(e_of(t), rho, rho_dot(t), delta, delta_dot, shear)
        analytic = tr.psi * (e_dot(t) + tr.eta * e_of(t)) + tr.xi
        fd = (eps_of(t + ht) - eps_of(t - ht)) / (2.0 * ht)
        if abs(analytic - fd) > 1e-3 * max(1.0, abs(fd)):
            return ("smetf sensitivity chain", False,
                    f"deps/dt mismatch at t={t:.2f}: fd={fd:.6e} "
                    f"analytic={analytic:.6e}")
    return ("smetf sensitivity chain", True,
            "P_s and deps/dt match finite differences")


def check_sign_gate():
    """eps·xi <= 0 whenever the constraint widens (delta_dot >= 0)."""
    shear = ShearParams.from_degrees(10.0)
    rng = np.random.default_rng(11)
    for _ in range(500):
        delta = 10 ** rng.uniform(-3, 1)
        z_s = rng.uniform(-50.0, 50.0)
        delta_dot = rng.uniform(0.0, 5.0)
        tr = transform_axis(z_s, 1.0, 0.0, delta, delta_dot, shear)
        if tr.eps_s * tr.xi > 1e-15:
            return ("eps*xi sign gate", False,
                    f"z_s={z_s} delta={delta}: eps*xi = {tr.eps_s * tr.xi:.2e}")
    return ("eps*xi sign gate", True, "500 random samples")


ALL_CHECKS = (
    check_tanh_inequality,
    check_settling_bounds,
    check_rpf_junctions,
    check_smetf_global,
    check_smetf_sensitivity,
    check_sign_gate,
)


def run_all_checks():
    return [fn() for fn in ALL_CHECKS]
