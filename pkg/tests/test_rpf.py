import math

import numpy as np
import pytest

from sappc_lab.checks import check_rpf_junctions
from sappc_lab.errors import NoJunctionRoot
from sappc_lab.rpf import (
    ConstraintParams,
    RpfParams,
    RpfProfile,
    delta_at,
    rho_at,
    solve_profile,
)

# bundled nominal coefficients (decay pulled inside the feasibility bound)
NOMINAL = dict(rho_e0=0.4, rho_einf=1e-6, l=0.45, t2=20.0, g_inf=3e-5)


def junction_residual(params: RpfParams, t1):
    amp = params.rho_e0 - params.rho_einf
    e = amp * math.exp(-params.l * t1)
    return e * (1.0 - 0.5 * params.l * (params.t2 - t1)) - (
        params.g_inf - params.rho_einf
    )


def oracle_junction(params: RpfParams, n=200_001, iters=200):
    """Independent dense-grid sign-change scan plus plain bisection."""
    ts = np.linspace(1e-4, params.t2 - 1e-4, n)
    f = np.array([junction_residual(params, t) for t in ts])
    flips = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    if not flips.size:
        return None
    lo, hi = ts[flips[0]], ts[flips[0] + 1]
    flo = junction_residual(params, lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = junction_residual(params, mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestSolveProfile:
    def test_fig2_example_lands_on_terminal(self):
        # t2 = 15 s, rho_e0 = 0.25 example set (decay per the nominal table)
        prof = solve_profile(RpfParams(0.25, 1e-6, 0.5, 15.0, 3e-5))
        v, dv = rho_at(prof, 15.0)
        assert abs(v - 3e-5) < 1e-12
        assert abs(dv) < 1e-12
        assert 0.0 < prof.t1 < 15.0

    def test_nominal_junction_matches_oracle(self):
        params = RpfParams(**NOMINAL)
        prof = solve_profile(params)
        t1_oracle = oracle_junction(params)
        assert t1_oracle is not None
        assert abs(prof.t1 - t1_oracle) < 1e-6
        assert abs(junction_residual(params, prof.t1)) <= 1e-12

    def test_decay_beyond_feasibility_bound_rejected(self):
        # decay 0.5 at this scale leaves the junction equation with no
        # sign change on (0, t2): the solver must say so, not fudge it
        params = RpfParams(0.4, 1e-6, 0.5, 20.0, 3e-5)
        assert oracle_junction(params) is None
        with pytest.raises(NoJunctionRoot):
            solve_profile(params)

    def test_infeasible_terminal_ordering_rejected_at_params(self):
        with pytest.raises(ValueError):
            RpfParams(0.4, 3e-5, 0.45, 20.0, 1e-6)  # rho_einf >= g_inf

    def test_junction_continuity(self):
        prof = solve_profile(RpfParams(**NOMINAL))
        v_lo, d_lo = rho_at(prof, prof.t1 - 1e-9)
        v_hi, d_hi = rho_at(prof, prof.t1 + 1e-9)
        assert abs(v_lo - v_hi) < 1e-8
        assert abs(d_lo - d_hi) < 1e-8


class TestRhoAt:
    def test_initial_value(self):
        for sign in (1.0, -1.0):
            prof = solve_profile(RpfParams(sign=sign, **NOMINAL))
            v, _ = rho_at(prof, 0.0)
            assert abs(v - sign * NOMINAL["rho_e0"]) < 1e-9

    def test_terminal_branch(self):
        prof = solve_profile(RpfParams(sign=-1.0, **NOMINAL))
        for t in (20.0, 25.0, 1e4):
            v, dv = rho_at(prof, t)
            assert v == -NOMINAL["g_inf"]
            assert dv == 0.0

    def test_magnitude_non_increasing(self):
        prof = solve_profile(RpfParams(**NOMINAL))
        ts = np.arange(0.0, 25.0, 1e-3)
        vals = np.array([abs(rho_at(prof, t)[0]) for t in ts])
        assert np.all(np.diff(vals) <= 1e-15)

    def test_sign_rule(self):
        neg = solve_profile(RpfParams(sign=-1.0, **NOMINAL))
        pos = solve_profile(RpfParams(sign=1.0, **NOMINAL))
        for t in np.linspace(0.0, 25.0, 101):
            v_n, d_n = rho_at(neg, t)
            v_p, d_p = rho_at(pos, t)
            assert v_n <= 0.0 and d_n >= 0.0
            assert v_p >= 0.0 and d_p <= 0.0


class TestDeltaAt:
    C = ConstraintParams(b0=1.5e-5)

    def test_terminal_width(self):
        prof = solve_profile(RpfParams(**NOMINAL))
        d1, rate1 = delta_at(prof, self.C, 20.0)
        d2, rate2 = delta_at(prof, self.C, 90.0)
        assert abs(d1 - self.C.b0 / NOMINAL["g_inf"]) < 1e-15
        assert d1 == d2 and rate1 == 0.0 and rate2 == 0.0

    def test_initial_width(self):
        prof = solve_profile(RpfParams(**NOMINAL))
        d0, rate0 = delta_at(prof, self.C, 0.0)
        assert abs(d0 - self.C.b0 / NOMINAL["rho_e0"]) < 1e-12
        assert rate0 > 0.0

    def test_monotone_non_decreasing(self):
        prof = solve_profile(RpfParams(sign=-1.0, **NOMINAL))
        ts = np.linspace(0.0, 25.0, 5001)
        widths = np.array([delta_at(prof, self.C, t)[0] for t in ts])
        assert np.all(np.diff(widths) >= -1e-15)

    def test_product_identity(self):
        prof = solve_profile(RpfParams(**NOMINAL))
        for t in np.linspace(0.0, 30.0, 301):
            d, _ = delta_at(prof, self.C, t)
            rho, _ = rho_at(prof, t)
            assert abs(d * abs(rho) - self.C.b0) < 1e-14

    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError):
            ConstraintParams(0.0)


class TestRandomParameterSets:
    def test_junction_invariants_hold(self):
        name, ok, detail = check_rpf_junctions(n=100)
        assert ok, detail


class TestDegenerateInitialError:
    def test_floor_applies(self):
        p = RpfParams.for_initial_error(0.0, None, 1e-6, 0.2, 20.0, 3e-5)
        assert p.sign == 1.0
        assert p.rho_e0 == 0.05
        p = RpfParams.for_initial_error(-1e-4, None, 1e-6, 0.2, 20.0, 3e-5)
        assert p.sign == -1.0
        assert p.rho_e0 == 0.05

    def test_actual_initial_error_used_when_large(self):
        p = RpfParams.for_initial_error(-0.3254, None, 1e-6, 0.2, 20.0, 3e-5)
        assert p.sign == -1.0
        assert abs(p.rho_e0 - 0.3254) < 1e-15

    def test_explicit_value_wins(self):
        p = RpfParams.for_initial_error(-0.3254, 0.4, 1e-6, 0.45, 20.0, 3e-5)
        assert p.rho_e0 == 0.4 and p.sign == -1.0
