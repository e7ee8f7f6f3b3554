"""Operator-driven calibration of the task frame.

Two ways to establish world_from_tracking:

  - reset_zero_point: the operator squeezes the trigger; the tip position
    becomes the world origin and only the tip's heading (yaw about gravity)
    is kept, so the new world stays gravity aligned.  Full-orientation
    anchoring exists behind a flag for rigs that need it.
  - dock_calibrate: both tips rest in a rigid two-seat dock whose geometry
    in world coordinates is known.  A closed-form fit (point alignment on
    the two seat origins plus a quaternion mean for rotation) is polished
    by one Gauss-Newton step on the full pose residuals, weighting
    1 radian as 1 meter.

Every raw pose that leaves the tracker afterwards goes through
apply_calibration before the rest of the pipeline sees it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from aumi.geometry import (
    Pose,
    Quaternion,
    compose,
    from_rotation_vector,
    inverse,
    pose_distance,
    to_euler_zyx,
    to_rotation_vector,
    yaw_rotation,
)

DOCK_SEAT_TRANS_TOL_M = 0.005
DOCK_SEAT_ROT_TOL_RAD = math.radians(2.0)


class DockMismatch(RuntimeError):
    """Dock seating check failed: raw relative pose disagrees with the jig."""


class CalibrationMethod(enum.IntEnum):
    ZERO_POINT_RESET = 1
    DOCK = 2


@dataclass(frozen=True)
class CalibrationState:
    """Active mapping from the tracker's session origin into the task world."""

    world_from_tracking: Pose
    method: CalibrationMethod
    established_at: int  # microseconds, event time that produced this state

    @classmethod
    def initial(cls) -> CalibrationState:
        """Session start: world coincides with the tracking origin."""
        return cls(Pose.identity(), CalibrationMethod.ZERO_POINT_RESET, 0)


@dataclass(frozen=True)
class PlaceholderSpec:
    """Known world-frame poses of the two dock seats (left and right tip)."""

    left_dock_in_world: Pose
    right_dock_in_world: Pose


@dataclass(frozen=True)
class HapticZoneConfig:
    """Feedback zone around the world origin."""

    radius: float = 0.03
    pulse_frequency_hint: float = 60.0

    def __post_init__(self) -> None:
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"haptic radius must be positive, got {self.radius}")


def reset_zero_point(
    tip_in_tracking: Pose, event_time: int, *, full_orientation: bool = False
) -> CalibrationState:
    """Re-anchor the world at the current tip pose.

    The tip position maps to the world origin exactly.  By default the new
    world orientation keeps only the tip's yaw, so its z axis stays along
    gravity; full_orientation adopts the complete tip rotation instead.
    """
    if full_orientation:
        anchor = tip_in_tracking.rotation
    else:
        _, _, yaw = to_euler_zyx(tip_in_tracking.rotation)
        anchor = yaw_rotation(yaw)
    tracking_from_world = Pose(tip_in_tracking.translation, anchor)
    return CalibrationState(
        inverse(tracking_from_world), CalibrationMethod.ZERO_POINT_RESET, event_time
    )


def apply_calibration(raw_pose: Pose, state: CalibrationState) -> Pose:
    """Tracking-frame pose -> world-frame pose."""
    return compose(state.world_from_tracking, raw_pose)


def haptic_status(tip_in_world: Pose, config: HapticZoneConfig) -> tuple[bool, float]:
    """(active, distance): active only while strictly inside the zone."""
    tx, ty, tz = tip_in_world.translation
    distance = math.sqrt(tx * tx + ty * ty + tz * tz)
    return (distance < config.radius, distance)


def _mean_rotation(a: Quaternion, b: Quaternion) -> Quaternion:
    """Chordal mean of two unit quaternions (sign-aligned sum, renormalized)."""
    s = 1.0 if a.dot(b) >= 0.0 else -1.0
    return Quaternion(a.w + s * b.w, a.x + s * b.x, a.y + s * b.y, a.z + s * b.z)


def dock_residuals(
    world_from_tracking: Pose, raw: tuple[Pose, Pose], spec: PlaceholderSpec
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Per-seat (translation m, rotation rad) residuals for a candidate fit."""
    out = []
    for raw_pose, seat in zip(raw, (spec.left_dock_in_world, spec.right_dock_in_world)):
        fitted = compose(world_from_tracking, raw_pose)
        out.append(pose_distance(fitted, seat))
    return (out[0], out[1])


def _dock_cost(world_from_tracking: Pose, raw: tuple[Pose, Pose], spec: PlaceholderSpec) -> float:
    (t0, r0), (t1, r1) = dock_residuals(world_from_tracking, raw, spec)
    return t0 * t0 + r0 * r0 + t1 * t1 + r1 * r1


def _gauss_newton_step(
    guess: Pose, raw: tuple[Pose, Pose], seats: tuple[Pose, Pose]
) -> Pose:
    """One least-squares update of guess against both seat poses.

    Left-perturbation model G' = (dt, exp(dtheta)) o G.  Translation rows
    have jacobian [I | -skew(p)], rotation rows [0 | I]; both residual
    kinds share the meter scale (1 rad weighs as 1 m).
    """
    rows = []
    rhs = []
    for raw_pose, seat in zip(raw, seats):
        fitted = compose(guess, raw_pose)
        px, py, pz = fitted.translation
        skew = np.array([[0.0, -pz, py], [pz, 0.0, -px], [-py, px, 0.0]])
        jt = np.hstack([np.eye(3), -skew])
        rt = np.array(fitted.translation) - np.array(seat.translation)
        rel = fitted.rotation.multiply(seat.rotation.conjugate())
        rr = np.array(to_rotation_vector(rel))
        jr = np.hstack([np.zeros((3, 3)), np.eye(3)])
        rows.extend([jt, jr])
        rhs.extend([rt, rr])
    J = np.vstack(rows)
    r = np.concatenate(rhs)
    delta, *_ = np.linalg.lstsq(J, -r, rcond=None)
    step = Pose(
        (float(delta[0]), float(delta[1]), float(delta[2])),
        from_rotation_vector((float(delta[3]), float(delta[4]), float(delta[5]))),
    )
    return compose(step, guess)


def dock_calibrate(
    left_raw: Pose, right_raw: Pose, spec: PlaceholderSpec, *, event_time: int = 0
) -> CalibrationState:
    """Fit world_from_tracking from both tips seated in the dock.

    Rejects badly seated tips first: the relative pose between the raw tips
    must match the jig's relative seat pose within DOCK_SEAT_TRANS_TOL_M /
    DOCK_SEAT_ROT_TOL_RAD, otherwise DockMismatch.
    """
    seats = (spec.left_dock_in_world, spec.right_dock_in_world)
    rel_raw = compose(inverse(left_raw), right_raw)
    rel_spec = compose(inverse(seats[0]), seats[1])
    dt, dr = pose_distance(rel_raw, rel_spec)
    if dt > DOCK_SEAT_TRANS_TOL_M or dr > DOCK_SEAT_ROT_TOL_RAD:
        raise DockMismatch(
            f"raw tips disagree with dock geometry by {dt * 1e3:.2f} mm / "
            f"{math.degrees(dr):.2f} deg (limits {DOCK_SEAT_TRANS_TOL_M * 1e3:.0f} mm, "
            f"{math.degrees(DOCK_SEAT_ROT_TOL_RAD):.0f} deg)"
        )

    raw = (left_raw, right_raw)
    # Closed form: each seat votes world_R = seat_R * raw_R^-1; average the
    # two votes, then place translation so the seat centroids coincide.
    vote_l = seats[0].rotation.multiply(left_raw.rotation.conjugate())
    vote_r = seats[1].rotation.multiply(right_raw.rotation.conjugate())
    rot = _mean_rotation(vote_l, vote_r)
    t_parts = []
    for raw_pose, seat in zip(raw, seats):
        rp = rot.rotate(raw_pose.translation)
        t_parts.append(
            (seat.translation[0] - rp[0], seat.translation[1] - rp[1], seat.translation[2] - rp[2])
        )
    trans = (
        0.5 * (t_parts[0][0] + t_parts[1][0]),
        0.5 * (t_parts[0][1] + t_parts[1][1]),
        0.5 * (t_parts[0][2] + t_parts[1][2]),
    )
    guess = Pose(trans, rot)

    polished = _gauss_newton_step(guess, raw, seats)
    if _dock_cost(polished, raw, spec) > _dock_cost(guess, raw, spec):
        polished = guess
    return CalibrationState(polished, CalibrationMethod.DOCK, event_time)
