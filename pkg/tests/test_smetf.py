import math

import numpy as np
import pytest

from sappc_lab.checks import (
    check_sign_gate,
    check_smetf_global,
    check_smetf_sensitivity,
)
from sappc_lab.errors import BranchViolation
from sappc_lab.smetf import (
    ShearParams,
    base_transform,
    shear_points,
    solve_z0,
    transform_axis,
)

SHEAR10 = ShearParams.from_degrees(10.0)


def oracle_bisect(z_s, delta, shear, iters=200):
    """Plain bisection on the implicit equation, independent of the
    production Newton path."""
    nu = 1e-12
    lo, hi = -1.0 + nu, 1.0 - nu

    def g(y):
        return 1.0 + delta * y + math.tan(0.5 * math.pi * y) * shear.tan_theta - z_s

    glo = g(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm < 0.0) == (glo < 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    return 1.0 + delta * y


class TestBaseTransform:
    def test_center(self):
        assert base_transform(1.0, 0.37) == 0.0

    def test_exact_tangent_value(self):
        assert abs(base_transform(1.5, 1.0) - 1.0) < 1e-15  # tan(pi/4)

    def test_asymptote(self):
        assert base_transform(1.0 + 1.0 - 1e-12, 1.0) > 1e10

    def test_branch_violation(self):
        with pytest.raises(BranchViolation):
            base_transform(2.0, 1.0)
        with pytest.raises(BranchViolation):
            base_transform(-0.001, 1.0)


class TestShearPoints:
    def test_fixed_line(self):
        assert shear_points(0.37, 0.0, SHEAR10) == (0.37, 0.0)

    def test_45_degrees(self):
        x1, y1 = shear_points(0.0, 1.0, ShearParams.from_degrees(45.0))
        assert abs(x1 - 1.0) < 1e-15 and y1 == 1.0

    def test_inverse_composition(self):
        fwd = ShearParams.from_degrees(23.0)
        rng = np.random.default_rng(0)
        for _ in range(50):
            x0, y0 = rng.normal(size=2)
            x1, y1 = shear_points(x0, y0, fwd)
            # inverse shear subtracts the same tilt
            x2 = x1 - y1 * fwd.tan_theta
            assert abs(x2 - x0) < 1e-14 and y1 == y0

    def test_theta_domain(self):
        with pytest.raises(ValueError):
            ShearParams(0.0)
        with pytest.raises(ValueError):
            ShearParams(math.pi / 2)


class TestSolveZ0:
    def test_fixed_point_at_one(self):
        z0, eps = solve_z0(1.0, 0.5, SHEAR10)
        assert abs(z0 - 1.0) < 1e-12
        assert abs(eps) < 1e-12

    def test_degenerate_shear_limit(self):
        # theta -> 0: the transform reduces to the base map, z0 -> z_s
        tiny = ShearParams(1e-9)
        for z_s in (0.2, 0.9, 1.3, 1.8):
            z0, _ = solve_z0(z_s, 1.0, tiny)
            assert abs(z0 - z_s) < 1e-6

    def test_against_bisection_oracle(self):
        z0, eps = solve_z0(5.0, 1.0, SHEAR10)
        z0_oracle = oracle_bisect(5.0, 1.0, SHEAR10)
        assert abs(z0 - z0_oracle) < 1e-10
        assert abs(z0 + eps * SHEAR10.tan_theta - 5.0) < 1e-11

    def test_random_against_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            delta = 10 ** rng.uniform(-3, 1)
            z_s = rng.uniform(-100.0, 100.0)
            z0, eps = solve_z0(z_s, delta, SHEAR10)
            assert abs(z0 - oracle_bisect(z_s, delta, SHEAR10)) < 1e-9
            assert abs(z0 + eps * SHEAR10.tan_theta - z_s) <= 1e-10 * (1 + abs(z_s))

    def test_global_solvability_grid(self):
        name, ok, detail = check_smetf_global()
        assert ok, detail


class TestTransformAxis:
    def test_on_curve_values(self):
        delta = 0.5
        tr = transform_axis(3e-5, 3e-5, 0.0, delta, 0.0, SHEAR10)
        assert abs(tr.z_s - 1.0) < 1e-12
        assert abs(tr.eps_s) < 1e-10
        assert tr.xi == 0.0
        expected_ps = math.pi / (math.pi * SHEAR10.tan_theta + 2.0 * delta)
        assert abs(tr.p_s - expected_ps) < 1e-9

    def test_sensitivity_finite_difference(self):
        name, ok, detail = check_smetf_sensitivity()
        assert ok, detail

    def test_sign_gate_samples(self):
        name, ok, detail = check_sign_gate()
        assert ok, detail

    def test_widening_constraint_sign_pattern(self):
        # z0 > 1 with delta widening: eps > 0 and xi < 0
        tr = transform_axis(2.0, 1.0, -0.1, 0.4, 0.05, SHEAR10)
        assert tr.z_0 > 1.0 and tr.eps_s > 0.0 and tr.xi < 0.0
        tr = transform_axis(0.1, 1.0, -0.1, 0.4, 0.05, SHEAR10)
        assert tr.z_0 < 1.0 and tr.eps_s < 0.0 and tr.xi > 0.0

    def test_monotone_increasing_in_z_s(self):
        zs = np.linspace(-30.0, 30.0, 601)
        eps = [solve_z0(z, 0.7, SHEAR10)[1] for z in zs]
        assert np.all(np.diff(eps) > 0.0)
        for z, e in zip(zs, eps):
            if abs(z - 1.0) > 1e-9:
                assert math.copysign(1.0, e) == math.copysign(1.0, z - 1.0)

    def test_horizontal_squeeze_identity(self):
        # the shear only squeezes the graph horizontally: the transform of
        # z_s = z0 + R(z0) tan(theta) equals R(z0) itself
        rng = np.random.default_rng(21)
        for _ in range(100):
            delta = 10 ** rng.uniform(-2, 1)
            y = rng.uniform(-0.95, 0.95)
            z0 = 1.0 + delta * y
            eps0 = base_transform(z0, delta)
            z_s = z0 + eps0 * SHEAR10.tan_theta
            _, eps = solve_z0(z_s, delta, SHEAR10)
            assert abs(eps - eps0) <= 1e-10 * (1.0 + abs(eps0))

    def test_eps_saturation_guard(self):
        # microscopic branch margin: eps is capped, P_s stays finite and
        # close to its 1/tan(theta) limit
        tr = transform_axis(1e11, 1.0, 0.0, 1e-4, 0.0, SHEAR10)
        assert abs(tr.eps_s) <= 1e12
        assert math.isfinite(tr.p_s)
        assert abs(tr.p_s - 1.0 / SHEAR10.tan_theta) < 1e-3
