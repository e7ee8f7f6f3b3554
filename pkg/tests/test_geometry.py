"""Pose algebra against an independent homogeneous-matrix oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest

from aumi.geometry import (
    DEFAULT_TIP_OFFSET_M,
    Extrinsic,
    FrameId,
    FrameMismatchError,
    Pose,
    Quaternion,
    compose,
    default_tip_extrinsics,
    from_rotation_vector,
    inverse,
    pose_distance,
    slerp,
    to_euler_zyx,
    to_rotation_vector,
    to_tip,
    transform_point,
    yaw_rotation,
)
from helpers import mat_angle, pose_to_hmat, quat_to_mat, random_pose, random_quat

TOL = 1e-9


def test_constructor_normalizes_and_canonicalizes():
    q = Quaternion(-2.0, 0.0, 0.0, 0.0)
    assert q.to_wxyz() == (1.0, 0.0, 0.0, 0.0)
    q = Quaternion(3.0, 4.0, 0.0, 0.0)
    assert abs(q.norm() - 1.0) <= TOL
    assert q.w == pytest.approx(0.6) and q.x == pytest.approx(0.8)


def test_constructor_sign_convention_at_zero_w():
    q = Quaternion(0.0, -1.0, 0.0, 0.0)
    assert q.w == 0.0 and q.x == 1.0
    q = Quaternion(0.0, 0.0, 0.0, -1.0)
    assert q.z == 1.0


def test_constructor_rejects_degenerate():
    with pytest.raises(ValueError):
        Quaternion(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        Quaternion(float("nan"), 0.0, 0.0, 1.0)


def test_unit_inputs_pass_through_bit_exact():
    # Already-unit components must not be perturbed by renormalization.
    rng = np.random.default_rng(7)
    for _ in range(200):
        q = random_quat(rng)
        again = Quaternion(q.w, q.x, q.y, q.z)
        assert again.to_wxyz() == q.to_wxyz()


def test_double_cover_identification():
    rng = np.random.default_rng(11)
    for _ in range(200):
        w, x, y, z = rng.normal(size=4)
        assert Quaternion(w, x, y, z) == Quaternion(-w, -x, -y, -z)


def test_rotate_matches_matrix_oracle():
    rng = np.random.default_rng(13)
    for _ in range(300):
        q = random_quat(rng)
        v = rng.uniform(-2, 2, size=3)
        got = q.rotate((v[0], v[1], v[2]))
        want = quat_to_mat(*q.to_wxyz()) @ v
        assert np.allclose(got, want, atol=1e-12)


def test_multiply_matches_matrix_oracle():
    rng = np.random.default_rng(17)
    for _ in range(300):
        a, b = random_quat(rng), random_quat(rng)
        got = quat_to_mat(*a.multiply(b).to_wxyz())
        want = quat_to_mat(*a.to_wxyz()) @ quat_to_mat(*b.to_wxyz())
        assert np.allclose(got, want, atol=1e-12)


def test_compose_tip_offset_example():
    # Identity-rotation controller at (0.5, 0.2, 1.0); tip rides +z of it.
    ctrl = Pose((0.5, 0.2, 1.0), Quaternion.identity())
    tip = Pose((0.0, 0.0, DEFAULT_TIP_OFFSET_M), Quaternion.identity())
    out = compose(ctrl, tip)
    assert out.translation == (0.5, 0.2, 1.0 + DEFAULT_TIP_OFFSET_M)
    assert out.rotation == Quaternion.identity()


def test_compose_matches_matrix_oracle():
    rng = np.random.default_rng(19)
    for _ in range(300):
        a, b = random_pose(rng), random_pose(rng)
        got = pose_to_hmat(compose(a, b))
        want = pose_to_hmat(a) @ pose_to_hmat(b)
        assert np.allclose(got, want, atol=1e-12)


def test_inverse_matches_matrix_oracle():
    rng = np.random.default_rng(23)
    for _ in range(300):
        p = random_pose(rng)
        got = pose_to_hmat(inverse(p))
        want = np.linalg.inv(pose_to_hmat(p))
        assert np.allclose(got, want, atol=1e-12)


def test_compose_inverse_round_trip():
    rng = np.random.default_rng(29)
    for _ in range(1000):
        p = random_pose(rng)
        dt, dr = pose_distance(compose(p, inverse(p)), Pose.identity())
        assert dt <= TOL and dr <= TOL
        dt, dr = pose_distance(compose(inverse(p), p), Pose.identity())
        assert dt <= TOL and dr <= TOL


def test_compose_associativity():
    rng = np.random.default_rng(31)
    for _ in range(300):
        a, b, c = random_pose(rng), random_pose(rng), random_pose(rng)
        dt, dr = pose_distance(compose(compose(a, b), c), compose(a, compose(b, c)))
        assert dt <= TOL and dr <= TOL


def test_slerp_endpoints_bit_exact():
    rng = np.random.default_rng(37)
    for _ in range(200):
        q0, q1 = random_quat(rng), random_quat(rng)
        assert slerp(q0, q1, 0.0) is q0
        assert slerp(q0, q1, 1.0) is q1


def test_slerp_halfway_between_z_rotations():
    q0 = yaw_rotation(0.0)
    q1 = yaw_rotation(math.pi / 2)
    mid = slerp(q0, q1, 0.5)
    want = yaw_rotation(math.pi / 4)
    assert mid.angle_to(want) <= TOL


def test_slerp_arc_length_proportional():
    rng = np.random.default_rng(41)
    for _ in range(200):
        q0, q1 = random_quat(rng), random_quat(rng)
        total = q0.angle_to(q1)
        t = float(rng.uniform(0, 1))
        qt = slerp(q0, q1, t)
        assert abs(q0.angle_to(qt) - t * total) <= 1e-9


def test_slerp_takes_shortest_arc_across_sign_flip():
    # Two nearly antipodal representations of nearby rotations.
    q0 = Quaternion(0.1, math.sqrt(1 - 0.01), 0.0, 0.0)
    q1_raw = (-0.1, math.sqrt(1 - 0.01), 0.0, 0.0)  # dot < 0 against q0
    q1 = Quaternion(*q1_raw)
    mid = slerp(q0, q1, 0.5)
    assert q0.angle_to(mid) <= 0.5 * q0.angle_to(q1) + TOL


def test_slerp_rejects_out_of_range_t():
    q = Quaternion.identity()
    with pytest.raises(ValueError):
        slerp(q, q, -0.1)
    with pytest.raises(ValueError):
        slerp(q, q, 1.1)


def test_pose_distance_identities():
    rng = np.random.default_rng(43)
    for _ in range(100):
        p = random_pose(rng)
        assert pose_distance(p, p) == (0.0, 0.0)
    # q and -q are the same rotation: zero angular distance.
    w, x, y, z = 0.3, 0.5, -0.4, 0.7
    a = Pose((0, 0, 0), Quaternion(w, x, y, z))
    b = Pose((0, 0, 0), Quaternion(-w, -x, -y, -z))
    assert pose_distance(a, b) == (0.0, 0.0)


def test_pose_distance_angle_matches_matrix_oracle():
    rng = np.random.default_rng(47)
    for _ in range(300):
        a, b = random_quat(rng), random_quat(rng)
        Ra, Rb = quat_to_mat(*a.to_wxyz()), quat_to_mat(*b.to_wxyz())
        want = mat_angle(Ra.T @ Rb)
        _, got = pose_distance(Pose((0, 0, 0), a), Pose((0, 0, 0), b))
        assert abs(got - want) <= 1e-7


def test_pose_distance_triangle_inequality():
    rng = np.random.default_rng(53)
    for _ in range(500):
        a, b, c = random_pose(rng), random_pose(rng), random_pose(rng)
        tab, rab = pose_distance(a, b)
        tbc, rbc = pose_distance(b, c)
        tac, rac = pose_distance(a, c)
        assert tac <= tab + tbc + TOL
        assert rac <= rab + rbc + TOL


def test_rotation_vector_round_trip():
    rng = np.random.default_rng(59)
    for _ in range(300):
        q = random_quat(rng)
        back = from_rotation_vector(to_rotation_vector(q))
        assert q.angle_to(back) <= 1e-9


def test_euler_yaw_matches_projection_oracle():
    # ZYX yaw equals the heading of the rotated x-axis projected to the
    # ground plane (whenever that projection is nondegenerate).
    rng = np.random.default_rng(61)
    for _ in range(300):
        q = random_quat(rng)
        R = quat_to_mat(*q.to_wxyz())
        xproj = R[:2, 0]
        if np.linalg.norm(xproj) < 1e-3:
            continue
        want = math.atan2(xproj[1], xproj[0])
        _, _, yaw = to_euler_zyx(q)
        assert abs(math.remainder(yaw - want, 2 * math.pi)) <= 1e-9


def test_transform_point_matches_compose():
    rng = np.random.default_rng(67)
    for _ in range(100):
        p = random_pose(rng)
        v = rng.uniform(-1, 1, size=3)
        got = transform_point(p, (v[0], v[1], v[2]))
        want = (pose_to_hmat(p) @ np.array([v[0], v[1], v[2], 1.0]))[:3]
        assert np.allclose(got, want, atol=1e-12)


def test_to_tip_accepts_declared_edges():
    left, right = default_tip_extrinsics()
    ctrl = Pose((0.2, 0.0, 1.0), Quaternion.identity())
    tip = to_tip(ctrl, left)
    assert tip.translation[2] == pytest.approx(1.0 + DEFAULT_TIP_OFFSET_M)
    to_tip(ctrl, right)


def test_to_tip_rejects_mismatched_frames():
    bad_parent = Extrinsic(FrameId.HEAD, FrameId.LEFT_TIP, Pose.identity())
    with pytest.raises(FrameMismatchError):
        to_tip(Pose.identity(), bad_parent)
    crossed = Extrinsic(FrameId.LEFT_CONTROLLER, FrameId.RIGHT_TIP, Pose.identity())
    with pytest.raises(FrameMismatchError):
        to_tip(Pose.identity(), crossed)


def test_wire_constructors_preserve_bits():
    vals = (0.1, -0.2, 0.3, 1.01, 0.0, 0.0, 0.0)  # deliberately non-unit
    p = Pose.from_wire(vals)
    assert p.to_wire() == vals
    assert p.rotation.norm() == pytest.approx(1.01)
