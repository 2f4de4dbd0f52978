import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from hexwrench.errors import SingularRotation
from hexwrench.quat import (
    mrp_from_quat,
    mrp_to_quat,
    quat_from_axis_angle,
    quat_identity,
    quat_integrate,
    quat_inverse,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    quat_to_rotmat,
    quat_to_yaw,
)

RNG = np.random.default_rng(1234)


def random_unit_quat(rng=RNG, max_angle=np.pi):
    axis = rng.normal(size=3)
    angle = rng.uniform(-max_angle, max_angle)
    return quat_from_axis_angle(axis, angle)


def quats_same_rotation(a, b, tol=1e-12):
    return abs(abs(float(np.dot(a, b))) - 1.0) < tol


class TestMultiply:
    def test_identity_is_neutral(self):
        q = random_unit_quat()
        assert np.allclose(quat_multiply(quat_identity(), q), q)
        assert np.allclose(quat_multiply(q, quat_identity()), q)

    def test_inverse_cancels(self):
        q = random_unit_quat()
        assert np.allclose(quat_multiply(q, quat_inverse(q)), quat_identity(), atol=1e-14)

    def test_two_quarter_turns_make_half_turn(self):
        # oracle: compose the rotation matrices instead of the quaternions
        quarter = quat_from_axis_angle([0, 0, 1], np.pi / 2)
        composed = quat_multiply(quarter, quarter)
        oracle = quat_to_rotmat(quarter) @ quat_to_rotmat(quarter)
        assert np.allclose(quat_to_rotmat(composed), oracle, atol=1e-14)
        half = quat_from_axis_angle([0, 0, 1], np.pi)
        assert quats_same_rotation(composed, half)

    def test_composition_matches_matrix_product(self):
        for _ in range(200):
            a, b = random_unit_quat(), random_unit_quat()
            left = quat_to_rotmat(quat_multiply(a, b))
            right = quat_to_rotmat(a) @ quat_to_rotmat(b)
            assert np.max(np.abs(left - right)) < 1e-12

    def test_applies_right_factor_first(self):
        # a * b with b = yaw(90deg): x_hat must first go to y_hat, then tilt by a
        a = quat_from_axis_angle([1, 0, 0], 0.3)
        b = quat_from_axis_angle([0, 0, 1], np.pi / 2)
        v = quat_rotate(quat_multiply(a, b), [1.0, 0.0, 0.0])
        expected = quat_to_rotmat(a) @ np.array([0.0, 1.0, 0.0])
        assert np.allclose(v, expected, atol=1e-14)


class TestInverse:
    def test_identity(self):
        assert np.allclose(quat_inverse(quat_identity()), quat_identity())

    def test_conjugation(self):
        q = np.array([0.5, 0.5, 0.5, 0.5])
        assert np.allclose(quat_inverse(q), [-0.5, -0.5, -0.5, 0.5])

    def test_matches_matrix_transpose(self):
        for _ in range(100):
            q = random_unit_quat()
            assert np.allclose(quat_to_rotmat(quat_inverse(q)), quat_to_rotmat(q).T, atol=1e-14)


class TestRotmat:
    def test_identity(self):
        assert np.allclose(quat_to_rotmat(quat_identity()), np.eye(3))

    def test_quarter_turn_permutes_axes(self):
        r = quat_to_rotmat(quat_from_axis_angle([0, 0, 1], np.pi / 2))
        assert np.allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-15)

    def test_orthonormal(self):
        for _ in range(100):
            r = quat_to_rotmat(random_unit_quat())
            assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12
            assert abs(np.linalg.det(r) - 1.0) < 1e-12

    def test_against_scipy(self):
        for _ in range(100):
            q = random_unit_quat()
            assert np.allclose(quat_to_rotmat(q), Rotation.from_quat(q).as_matrix(), atol=1e-12)

    def test_rotate_agrees_with_matrix(self):
        q = random_unit_quat()
        v = RNG.normal(size=3)
        assert np.allclose(quat_rotate(q, v), quat_to_rotmat(q) @ v, atol=1e-13)


class TestMrp:
    def test_identity_maps_to_zero(self):
        assert np.allclose(mrp_from_quat(quat_identity(), a=1.0), np.zeros(3))

    def test_quarter_turn_about_x(self):
        # p = f qv/(a+qs) with a=1, f=4 evaluated by hand for a 90 deg turn
        q = quat_from_axis_angle([1, 0, 0], np.pi / 2)
        expected = 4.0 * np.sin(np.pi / 4) / (1.0 + np.cos(np.pi / 4))
        p = mrp_from_quat(q, a=1.0)
        assert np.allclose(p, [expected, 0.0, 0.0])
        assert abs(expected - 1.6568542494923806) < 1e-15

    @pytest.mark.parametrize("a", [0.0, 0.5, 1.0])
    def test_round_trip(self, a):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            q = random_unit_quat(rng, max_angle=np.deg2rad(179.0))
            q = quat_normalize(q)
            back = mrp_to_quat(mrp_from_quat(q, a), a)
            assert np.max(np.abs(back - q)) < 1e-12

    def test_zero_maps_to_identity(self):
        assert np.allclose(mrp_to_quat(np.zeros(3)), quat_identity())

    def test_to_quat_is_unit_norm(self):
        rng = np.random.default_rng(8)
        for a in (0.0, 0.5, 1.0):
            p = rng.uniform(-1, 1, size=(500, 3))
            p *= (rng.uniform(0, 10, size=(500, 1)) / np.linalg.norm(p, axis=1, keepdims=True))
            q = mrp_to_quat(p, a)
            assert np.max(np.abs(np.linalg.norm(q, axis=1) - 1.0)) < 1e-12

    def test_singularity_raises(self):
        # a = 0 is singular at 180 degrees
        q = quat_from_axis_angle([0, 1, 0], np.pi)
        with pytest.raises(SingularRotation):
            mrp_from_quat(q, a=0.0)

    def test_small_angle_approximates_rotation_vector(self):
        q = quat_from_axis_angle([0, 0, 1], 1e-4)
        for a in (0.0, 0.5, 1.0):
            assert np.allclose(mrp_from_quat(q, a), [0, 0, 1e-4], atol=1e-11)


class TestIntegrate:
    def test_zero_rate_is_identity_map(self):
        q = random_unit_quat()
        assert np.array_equal(quat_integrate(q, np.zeros(3), 0.01), q)

    def test_half_turn_about_z(self):
        # closed-form axis-angle oracle: pi rad/s for 1 s = 180 deg about z
        q = quat_integrate(quat_identity(), [0.0, 0.0, np.pi], 1.0)
        assert quats_same_rotation(q, quat_from_axis_angle([0, 0, 1], np.pi), tol=1e-12)

    def test_norm_preserved_each_step(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            q = random_unit_quat(rng)
            omega = rng.normal(size=3) * 5.0
            out = quat_integrate(q, omega, 0.01, renormalize=False)
            assert abs(np.linalg.norm(out) - 1.0) < 1e-12

    def test_norm_drift_over_many_steps(self):
        q = quat_identity()
        omega = np.array([0.7, -1.1, 0.4])
        for _ in range(10_000):
            q = quat_integrate(q, omega, 0.01, renormalize=False)
        assert abs(np.linalg.norm(q) - 1.0) < 1e-9

    def test_renormalized_norm_is_one(self):
        q = quat_identity()
        omega = np.array([0.7, -1.1, 0.4])
        for _ in range(1000):
            q = quat_integrate(q, omega, 0.01)
        assert abs(np.linalg.norm(q) - 1.0) <= 4 * np.finfo(float).eps

    def test_constant_rate_matches_axis_angle(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            omega = rng.normal(size=3) * 2.0
            n_steps = 173
            ts = 0.01
            q = quat_identity()
            for _ in range(n_steps):
                q = quat_integrate(q, omega, ts)
            oracle = quat_from_axis_angle(omega, np.linalg.norm(omega) * n_steps * ts)
            assert quats_same_rotation(q, oracle, tol=1e-9)

    def test_small_rate_branch_continuous(self):
        q = random_unit_quat()
        lo = quat_integrate(q, np.array([0.0, 0.0, 9.9e-7]), 0.01)
        hi = quat_integrate(q, np.array([0.0, 0.0, 1.1e-6]), 0.01)
        assert np.max(np.abs(lo - hi)) < 1e-8


def test_yaw_extraction():
    q = quat_from_axis_angle([0, 0, 1], 0.7)
    assert abs(float(quat_to_yaw(q)) - 0.7) < 1e-12
    tilted = quat_multiply(q, quat_from_axis_angle([1, 0, 0], 1e-3))
    assert abs(float(quat_to_yaw(tilted)) - 0.7) < 1e-5
