"""Calibration: zero-point reset, dock fitting, haptic zone."""

from __future__ import annotations

import math

import numpy as np
import pytest

from aumi.calibration import (
    CalibrationMethod,
    CalibrationState,
    DockMismatch,
    HapticZoneConfig,
    PlaceholderSpec,
    apply_calibration,
    dock_calibrate,
    dock_residuals,
    haptic_status,
    reset_zero_point,
)
from aumi.geometry import (
    Pose,
    Quaternion,
    compose,
    inverse,
    pose_distance,
    yaw_rotation,
)
from helpers import random_pose

TOL = 1e-9


def make_spec() -> PlaceholderSpec:
    # Two seats 30 cm apart with distinct orientations, like a real jig.
    left = Pose((-0.15, 0.0, 0.02), yaw_rotation(math.radians(20.0)))
    right = Pose((0.15, 0.0, 0.02), yaw_rotation(math.radians(-35.0)))
    return PlaceholderSpec(left, right)


def docked_raw(spec: PlaceholderSpec, world_from_tracking: Pose) -> tuple[Pose, Pose]:
    """Raw tip poses a tracker with the given calibration would report."""
    tracking_from_world = inverse(world_from_tracking)
    return (
        compose(tracking_from_world, spec.left_dock_in_world),
        compose(tracking_from_world, spec.right_dock_in_world),
    )


# --- zero point -----------------------------------------------------------


def test_reset_zero_point_moves_tip_to_origin():
    rng = np.random.default_rng(101)
    for _ in range(100):
        tip = random_pose(rng, span=1.5)
        state = reset_zero_point(tip, event_time=5_000_000)
        world_tip = apply_calibration(tip, state)
        assert math.sqrt(sum(c * c for c in world_tip.translation)) <= TOL
        assert state.method == CalibrationMethod.ZERO_POINT_RESET
        assert state.established_at == 5_000_000


def test_reset_zero_point_keeps_world_gravity_aligned():
    # A tip rolled 30 degrees must not tilt the new world frame: the world
    # axes expressed in tracking stay yaw-only (z maps to z).
    roll = Quaternion.from_axis_angle((1.0, 0.0, 0.0), math.radians(30.0))
    tip = Pose((0.3, -0.2, 1.1), roll)
    state = reset_zero_point(tip, event_time=0)
    tracking_from_world = inverse(state.world_from_tracking)
    z_in_tracking = tracking_from_world.rotation.rotate((0.0, 0.0, 1.0))
    assert abs(z_in_tracking[0]) <= 1e-12
    assert abs(z_in_tracking[1]) <= 1e-12
    assert z_in_tracking[2] == pytest.approx(1.0, abs=1e-12)


def test_reset_zero_point_preserves_heading():
    # Hand-built rotation with known yaw: extraction must recover it.
    yaw = math.radians(40.0)
    q = yaw_rotation(yaw).multiply(
        Quaternion.from_axis_angle((0.0, 1.0, 0.0), math.radians(15.0))
    ).multiply(Quaternion.from_axis_angle((1.0, 0.0, 0.0), math.radians(-25.0)))
    tip = Pose((0.1, 0.2, 0.3), q)
    state = reset_zero_point(tip, event_time=0)
    tracking_from_world = inverse(state.world_from_tracking)
    expected = yaw_rotation(yaw)
    assert tracking_from_world.rotation.angle_to(expected) <= 1e-9


def test_reset_zero_point_full_orientation_flag():
    rng = np.random.default_rng(103)
    tip = random_pose(rng)
    state = reset_zero_point(tip, event_time=0, full_orientation=True)
    world_tip = apply_calibration(tip, state)
    dt, dr = pose_distance(world_tip, Pose.identity())
    assert dt <= TOL and dr <= TOL


def test_apply_calibration_inverse_example():
    rng = np.random.default_rng(107)
    g = random_pose(rng)
    state = CalibrationState(g, CalibrationMethod.DOCK, 0)
    dt, dr = pose_distance(apply_calibration(inverse(g), state), Pose.identity())
    assert dt <= TOL and dr <= TOL


# --- dock -----------------------------------------------------------------


def test_dock_calibrate_recovers_noiseless_truth():
    spec = make_spec()
    rng = np.random.default_rng(109)
    for _ in range(100):
        truth = random_pose(rng, span=2.0)
        left_raw, right_raw = docked_raw(spec, truth)
        state = dock_calibrate(left_raw, right_raw, spec, event_time=42)
        dt, dr = pose_distance(state.world_from_tracking, truth)
        assert dt <= TOL and dr <= TOL
        assert state.method == CalibrationMethod.DOCK
        assert state.established_at == 42


def test_dock_calibrate_rejects_translation_mismatch():
    spec = make_spec()
    rng = np.random.default_rng(113)
    truth = random_pose(rng)
    left_raw, right_raw = docked_raw(spec, truth)
    shifted = Pose(
        (right_raw.translation[0] + 0.010, right_raw.translation[1], right_raw.translation[2]),
        right_raw.rotation,
    )
    with pytest.raises(DockMismatch):
        dock_calibrate(left_raw, shifted, spec)


def test_dock_calibrate_rejects_rotation_mismatch():
    spec = make_spec()
    rng = np.random.default_rng(127)
    truth = random_pose(rng)
    left_raw, right_raw = docked_raw(spec, truth)
    twisted = Pose(
        right_raw.translation,
        right_raw.rotation.multiply(
            Quaternion.from_axis_angle((0.0, 0.0, 1.0), math.radians(3.0))
        ),
    )
    with pytest.raises(DockMismatch):
        dock_calibrate(left_raw, twisted, spec)


def test_dock_calibrate_tolerates_in_spec_seating():
    spec = make_spec()
    rng = np.random.default_rng(131)
    truth = random_pose(rng)
    left_raw, right_raw = docked_raw(spec, truth)
    nudged = Pose(
        (right_raw.translation[0] + 0.001, right_raw.translation[1], right_raw.translation[2]),
        right_raw.rotation,
    )
    state = dock_calibrate(left_raw, nudged, spec)
    dt, _ = pose_distance(state.world_from_tracking, truth)
    assert dt <= 0.002  # fit splits the 1 mm seating error between seats


def _rotvec_to_mat(v: np.ndarray) -> np.ndarray:
    angle = np.linalg.norm(v)
    if angle < 1e-15:
        return np.eye(3)
    k = v / angle
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


def _mat_angle(R: np.ndarray) -> float:
    return float(np.arccos(np.clip((np.trace(R) - 1) / 2, -1.0, 1.0)))


def _brute_force_fit(raw, seats, starts):
    """Grid+refine oracle: minimize the weighted dock cost with scipy."""
    from scipy.optimize import minimize

    raw_R = [quat_mat(p.rotation) for p in raw]
    raw_t = [np.array(p.translation) for p in raw]
    seat_R = [quat_mat(p.rotation) for p in seats]
    seat_t = [np.array(p.translation) for p in seats]

    def cost(x):
        R = _rotvec_to_mat(x[3:6])
        t = x[0:3]
        c = 0.0
        for i in range(2):
            rt = R @ raw_t[i] + t - seat_t[i]
            c += float(rt @ rt)
            c += _mat_angle(R @ raw_R[i] @ seat_R[i].T) ** 2
        return c

    best = None
    for x0 in starts:
        res = minimize(cost, x0, method="Nelder-Mead",
                       options={"fatol": 1e-14, "xatol": 1e-9, "maxiter": 6000})
        if best is None or res.fun < best.fun:
            best = res
    return best.x, best.fun


def quat_mat(q: Quaternion) -> np.ndarray:
    from helpers import quat_to_mat

    return quat_to_mat(*q.to_wxyz())


def test_dock_calibrate_near_least_squares_under_noise():
    # 20 seeded instances with 1 mm isotropic seating noise: the one-step
    # polish must land at (or within a hair of) the brute-force optimum.
    spec = make_spec()
    seats = (spec.left_dock_in_world, spec.right_dock_in_world)
    rng = np.random.default_rng(137)
    sigma_t = 0.001
    checked = 0
    while checked < 20:
        truth = random_pose(rng)
        raw = []
        for clean in docked_raw(spec, truth):
            dt = rng.normal(0.0, sigma_t, size=3)
            raw.append(
                Pose(
                    (
                        clean.translation[0] + dt[0],
                        clean.translation[1] + dt[1],
                        clean.translation[2] + dt[2],
                    ),
                    clean.rotation,
                )
            )
        raw = tuple(raw)
        try:
            state = dock_calibrate(raw[0], raw[1], spec)
        except DockMismatch:
            # A noise draw past the seating gate means re-seat, not fit.
            continue
        checked += 1
        fit = state.world_from_tracking

        # Estimate stays within a few noise SDs of the ground truth.
        dt_err, dr_err = pose_distance(fit, truth)
        assert dt_err <= 4 * sigma_t
        assert dr_err <= math.radians(1.0)

        # And its cost is not worse than the brute-force optimum.
        from aumi.calibration import _dock_cost

        x_start = np.concatenate(
            [np.array(fit.translation) + rng.normal(0, 1e-4, 3), rotvec_of(fit)]
        )
        _, oracle_cost = _brute_force_fit(raw, seats, [x_start])
        assert _dock_cost(fit, raw, spec) <= oracle_cost * (1 + 1e-6) + 1e-12


def rotvec_of(p: Pose) -> np.ndarray:
    from aumi.geometry import to_rotation_vector

    return np.array(to_rotation_vector(p.rotation))


def test_dock_residuals_zero_for_perfect_fit():
    spec = make_spec()
    rng = np.random.default_rng(139)
    truth = random_pose(rng)
    left_raw, right_raw = docked_raw(spec, truth)
    (t0, r0), (t1, r1) = dock_residuals(truth, (left_raw, right_raw), spec)
    assert max(t0, r0, t1, r1) <= 1e-12


# --- haptics --------------------------------------------------------------


def test_haptic_threshold_is_strict():
    cfg = HapticZoneConfig(radius=0.03)
    inside = Pose((0.0299, 0.0, 0.0), Quaternion.identity())
    boundary = Pose((0.0300, 0.0, 0.0), Quaternion.identity())
    outside = Pose((0.0301, 0.0, 0.0), Quaternion.identity())
    assert haptic_status(inside, cfg) == (True, 0.0299)
    assert haptic_status(boundary, cfg) == (False, 0.0300)
    assert haptic_status(outside, cfg) == (False, 0.0301)


def test_haptic_distance_is_norm():
    cfg = HapticZoneConfig()
    p = Pose((0.003, 0.004, 0.0), Quaternion.identity())
    active, d = haptic_status(p, cfg)
    assert active and d == pytest.approx(0.005)


def test_haptic_config_rejects_bad_radius():
    with pytest.raises(ValueError):
        HapticZoneConfig(radius=0.0)
    with pytest.raises(ValueError):
        HapticZoneConfig(radius=-0.01)
