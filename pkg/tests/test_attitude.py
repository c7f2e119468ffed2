import math

import numpy as np
import pytest

from sappc_lab.attitude import (
    ActuatorLimits,
    DisturbanceAxis,
    DisturbanceModel,
    Inertia,
    Pulse,
    ReferenceTrajectory,
    UnitQuaternion,
    apply_actuator,
    disturbance_at,
    error_dynamics_scalar,
    error_quaternion,
    jacobian,
    jacobian_inverse,
    quat_conjugate,
    quat_multiply,
    rotation_matrix,
)
from sappc_lab.errors import SingularJacobian


def random_unit_quaternion(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return UnitQuaternion.from_wxyz(q)


def nominal_disturbance(pulse=None):
    return DisturbanceModel(
        axes=(
            DisturbanceAxis(4.0, 3.0, 3.0, 10.0, -20.0),
            DisturbanceAxis(-1.5, 2.0, 3.0, 5.0, 20.0),
            DisturbanceAxis(3.0, 10.0, -8.0, 4.0, 20.0),
        ),
        pulse=pulse,
    )


class TestQuaternionOps:
    def test_identity_product(self):
        q = UnitQuaternion.from_wxyz([0.5, 0.5, 0.5, 0.5])
        out = quat_multiply(UnitQuaternion.identity(), q)
        np.testing.assert_allclose(out.as_wxyz(), q.as_wxyz(), atol=1e-15)

    def test_conjugate_product_is_identity(self):
        q = UnitQuaternion.from_wxyz([0.7891, 0.3254, 0.4068, -0.3254])
        out = quat_multiply(q, quat_conjugate(q))
        np.testing.assert_allclose(out.as_wxyz(), [1, 0, 0, 0], atol=1e-12)

    def test_half_turn_square(self):
        # direct Hamilton expansion: w' = w^2 - x^2 = 0, x' = 2wx -> 1
        q = UnitQuaternion(0.7071, np.array([0.7071, 0.0, 0.0]))
        out = quat_multiply(q, q)
        np.testing.assert_allclose(out.as_wxyz(), [0, 1, 0, 0], atol=1e-12)

    def test_error_quaternion_same_attitude(self):
        q = random_unit_quaternion(np.random.default_rng(1))
        out = error_quaternion(q, q)
        np.testing.assert_allclose(out.as_wxyz(), [1, 0, 0, 0], atol=1e-12)

    def test_error_quaternion_identity_target(self):
        q_s = UnitQuaternion.from_xyzw([0.3254, 0.4068, -0.3254, 0.7891])
        out = error_quaternion(q_s, UnitQuaternion.identity())
        np.testing.assert_allclose(out.v, [0.3254, 0.4068, -0.3254], atol=1e-4)

    def test_scalar_part_made_nonnegative(self):
        q_s = UnitQuaternion.from_wxyz([-0.7891, 0.3254, 0.4068, -0.3254])
        out = error_quaternion(q_s, UnitQuaternion.identity())
        assert out.w > 0


class TestRotationMatrix:
    def test_identity(self):
        np.testing.assert_allclose(
            rotation_matrix(UnitQuaternion.identity()), np.eye(3), atol=1e-15
        )

    def test_pi_about_x(self):
        q = UnitQuaternion(0.0, np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(
            rotation_matrix(q), np.diag([1.0, -1.0, -1.0]), atol=1e-15
        )

    def test_orthonormality_random(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            c = rotation_matrix(random_unit_quaternion(rng))
            np.testing.assert_allclose(c @ c.T, np.eye(3), atol=1e-10)
            assert abs(np.linalg.det(c) - 1.0) < 1e-10


class TestJacobian:
    def test_identity_quaternion(self):
        np.testing.assert_allclose(
            jacobian(UnitQuaternion.identity()), 0.5 * np.eye(3), atol=1e-15
        )

    def test_determinant_identity(self):
        # det(2*Gamma) = q_e0 for a unit quaternion (cofactor expansion of
        # a*I + b^x gives a*(a^2 + |b|^2))
        rng = np.random.default_rng(3)
        for _ in range(200):
            q = random_unit_quaternion(rng)
            det = np.linalg.det(2.0 * jacobian(q))
            assert abs(det - q.w) < 1e-12

    def test_singular_at_zero_scalar(self):
        q = UnitQuaternion(0.0, np.array([0.0, 1.0, 0.0]))
        assert abs(np.linalg.det(jacobian(q))) < 1e-15
        with pytest.raises(SingularJacobian):
            jacobian_inverse(q)

    def test_inverse_matches_linalg(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            q = random_unit_quaternion(rng)
            if abs(q.w) < 1e-3:
                continue
            np.testing.assert_allclose(
                jacobian_inverse(q), np.linalg.inv(jacobian(q)), atol=1e-9
            )


class TestErrorDynamics:
    J = Inertia(np.diag([4.0, 4.0, 4.0]))

    def test_equilibrium(self):
        q_dot, w_dot = error_dynamics_scalar(
            (1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0), self.J,
            (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
        )
        assert all(abs(x) < 1e-15 for x in q_dot)
        assert all(abs(x) < 1e-15 for x in w_dot)

    def test_identity_error_nonzero_reference(self):
        # with q_e = identity, omega_e = 0: C_e = I, omega_s = omega_d, so
        # J w_dot = -J wd_dot - wd x (J wd)
        wd = (0.01, -0.02, 0.015)
        wdd = (1e-3, 2e-3, -5e-4)
        J = Inertia(np.diag([4.0, 5.0, 6.0]))
        _, w_dot = error_dynamics_scalar(
            (1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0), J, wd, wdd,
            (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
        )
        expected = np.linalg.solve(
            J.J, -J.J @ np.array(wdd) - np.cross(wd, J.J @ np.array(wd))
        )
        np.testing.assert_allclose(w_dot, expected, atol=1e-15)

    def test_unit_norm_preserving_kinematics(self):
        # q_ev . q_ev_dot + q_e0 * q_e0_dot = 0 for any state
        rng = np.random.default_rng(5)
        for _ in range(100):
            q = random_unit_quaternion(rng).as_tuple()
            w = tuple(rng.normal(scale=0.5, size=3))
            q_dot, _ = error_dynamics_scalar(
                q, w, self.J, (0.01, 0.0, -0.01), (0.0, 0.0, 0.0),
                (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
            )
            inner = sum(q[i] * q_dot[i] for i in range(4))
            assert abs(inner) < 1e-15


class TestDisturbance:
    def test_value_at_zero(self):
        d = disturbance_at(nominal_disturbance(), 0.0)
        np.testing.assert_allclose(d, [-0.017, 0.023, 0.012], atol=1e-15)

    def test_pulse_window(self):
        model = nominal_disturbance(Pulse(50.0, 0.5, (1.0, 1.0, 1.0)))
        base = disturbance_at(nominal_disturbance(), 50.25)
        with_pulse = disturbance_at(model, 50.25)
        np.testing.assert_allclose(
            np.array(with_pulse) - np.array(base), [1.0, 1.0, 1.0], atol=1e-15
        )
        after = disturbance_at(model, 50.6)
        np.testing.assert_allclose(after, disturbance_at(nominal_disturbance(), 50.6))

    def test_norm_bounded_over_full_period(self):
        # common period of all harmonics is 2*pi/omega_p
        model = nominal_disturbance()
        period = 2.0 * math.pi / model.omega_p
        ts = np.linspace(0.0, period, 20001)
        norms = [np.linalg.norm(disturbance_at(model, t)) for t in ts]
        assert max(norms) <= model.bound


class TestActuator:
    LIM = ActuatorLimits(u_max=0.5, u_min=0.005)

    def test_saturation(self):
        assert apply_actuator((0.7, -0.7, 0.2), self.LIM) == (0.5, -0.5, 0.2)

    def test_deadzone(self):
        assert apply_actuator((0.003, -0.004, 0.005), self.LIM) == (0.0, 0.0, 0.005)

    def test_passthrough(self):
        assert apply_actuator((0.1, -0.1, 0.0), self.LIM) == (0.1, -0.1, 0.0)

    def test_limit_invariant(self):
        with pytest.raises(ValueError):
            ActuatorLimits(u_max=0.5, u_min=0.6)


class TestInertia:
    def test_symmetry_required(self):
        bad = np.diag([4.0, 4.0, 4.0])
        bad[0, 1] = 1e-6
        with pytest.raises(ValueError):
            Inertia(bad)

    def test_positive_definite_required(self):
        with pytest.raises(ValueError):
            Inertia(np.diag([4.0, -1.0, 4.0]))

    def test_rayleigh_bounds(self):
        J = Inertia(np.array([[4.0, 0.2, 0.0], [0.2, 5.0, 0.1],
                              [0.0, 0.1, 6.0]]))
        rng = np.random.default_rng(6)
        for _ in range(100):
            x = rng.normal(size=3)
            r = (x @ J.J @ x) / (x @ x)
            assert J.j_min - 1e-12 <= r <= J.j_max + 1e-12


class TestTypes:
    def test_unit_quaternion_renormalizes(self):
        q = UnitQuaternion(2.0, np.array([0.0, 0.0, 0.0]))
        assert abs(q.w - 1.0) < 1e-15

    def test_xyzw_round_trip(self):
        arr = np.array([0.3254, 0.4068, -0.3254, 0.7891])
        q = UnitQuaternion.from_xyzw(arr)
        np.testing.assert_allclose(q.as_xyzw(), arr / np.linalg.norm(arr),
                                   atol=1e-12)

    def test_reference_trajectory_holds_callables(self):
        ref = ReferenceTrajectory(
            UnitQuaternion.identity(),
            lambda t: (0.0, 0.0, 0.0),
            lambda t: (0.0, 0.0, 0.0),
        )
        assert ref.omega_d(1.0) == (0.0, 0.0, 0.0)
