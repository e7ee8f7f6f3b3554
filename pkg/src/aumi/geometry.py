"""Rigid-body pose algebra on SE(3) with explicit frame tags.

Conventions, used everywhere in this package:

  - Quaternions are scalar-first (w, x, y, z), unit norm, canonical sign:
    w >= 0, and when w == 0 the first nonzero of (x, y, z) is positive.
    q and -q denote the same rotation; canonicalization picks one.
  - A Pose maps child-frame coordinates into its parent frame
    ("parent-from-child").  compose(a, b) applies b first, then a, so
    world_from_tip = compose(world_from_controller, controller_from_tip).
  - Translations are meters, angles radians, times microseconds.
    All scalars are 64-bit floats.

Numerical contract: results of any constructor or operation carry unit
quaternions to within NORM_TOL.  Normalization divides only when the norm
has actually drifted, so values that are already unit pass through
bit-for-bit (interpolation endpoints and identity compositions must not
perturb stored data).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

NORM_TOL = 1e-9

# Renormalize only past this drift of |q|^2 from 1; below it the stored
# components are kept untouched so unit inputs round-trip bit-exactly.
_RENORM_SQ = 1e-12


class FrameMismatchError(ValueError):
    """Raised when a transform is composed along an undeclared frame edge."""


class FrameId(enum.IntEnum):
    """Coordinate frames the pipeline knows about.

    TRACKING_ORIGIN is the headset vendor's arbitrary session origin.
    WORLD is the operator-established task frame (zero point or dock).
    """

    TRACKING_ORIGIN = 0
    WORLD = 1
    LEFT_CONTROLLER = 2
    RIGHT_CONTROLLER = 3
    LEFT_TIP = 4
    RIGHT_TIP = 5
    HEAD = 6
    ROBOT_BASE = 7
    ROBOT_LEFT_EE = 8
    ROBOT_RIGHT_EE = 9
    ROBOT_HEAD_CAM = 10


Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion, scalar first.  Construction normalizes and fixes sign."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        w, x, y, z = float(self.w), float(self.x), float(self.y), float(self.z)
        n2 = w * w + x * x + y * y + z * z
        if not math.isfinite(n2) or n2 < 1e-24:
            raise ValueError(f"quaternion norm is degenerate: ({w}, {x}, {y}, {z})")
        if abs(n2 - 1.0) > _RENORM_SQ:
            n = math.sqrt(n2)
            w, x, y, z = w / n, x / n, y / n, z / n
        if w < 0.0 or (
            w == 0.0 and (x < 0.0 or (x == 0.0 and (y < 0.0 or (y == 0.0 and z < 0.0))))
        ):
            # +0.0 scrubs the -0.0 the negation would leave behind.
            w, x, y, z = -w + 0.0, -x + 0.0, -y + 0.0, -z + 0.0
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def identity(cls) -> Quaternion:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_wire(cls, w: float, x: float, y: float, z: float) -> Quaternion:
        """Adopt stored components exactly, skipping normalization and sign fix.

        For codec round-trip fidelity only: file and wire readers must
        reproduce the written bytes, including out-of-contract values that
        validation will flag later.  Algebra assumes unit inputs.
        """
        q = object.__new__(cls)
        object.__setattr__(q, "w", float(w))
        object.__setattr__(q, "x", float(x))
        object.__setattr__(q, "y", float(y))
        object.__setattr__(q, "z", float(z))
        return q

    @classmethod
    def from_axis_angle(cls, axis: Vec3, angle: float) -> Quaternion:
        ax, ay, az = axis
        n = math.sqrt(ax * ax + ay * ay + az * az)
        if n < 1e-12:
            raise ValueError("rotation axis has zero length")
        h = 0.5 * angle
        s = math.sin(h) / n
        return cls(math.cos(h), ax * s, ay * s, az * s)

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def dot(self, other: Quaternion) -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def multiply(self, other: Quaternion) -> Quaternion:
        """Hamilton product self * other (apply other's rotation first)."""
        aw, ax, ay, az = self.w, self.x, self.y, self.z
        bw, bx, by, bz = other.w, other.x, other.y, other.z
        return Quaternion(
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        )

    def conjugate(self) -> Quaternion:
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v: Vec3) -> Vec3:
        """Rotate a 3-vector: v' = q v q*."""
        vx, vy, vz = v
        tx = 2.0 * (self.y * vz - self.z * vy)
        ty = 2.0 * (self.z * vx - self.x * vz)
        tz = 2.0 * (self.x * vy - self.y * vx)
        return (
            vx + self.w * tx + (self.y * tz - self.z * ty),
            vy + self.w * ty + (self.z * tx - self.x * tz),
            vz + self.w * tz + (self.x * ty - self.y * tx),
        )

    def angle_to(self, other: Quaternion) -> float:
        """Geodesic rotation angle to another quaternion, in [0, pi].

        Computed from the relative quaternion via atan2, which keeps full
        precision at tiny angles where acos of the dot product cannot.
        """
        aw, ax, ay, az = self.w, self.x, self.y, self.z
        bw, bx, by, bz = other.w, other.x, other.y, other.z
        # Pairwise grouping makes each difference cancel exactly when
        # other is self (or -self), so identical rotations measure 0.0.
        rw = aw * bw + ax * bx + ay * by + az * bz
        rx = (aw * bx - ax * bw) + (az * by - ay * bz)
        ry = (aw * by - ay * bw) + (ax * bz - az * bx)
        rz = (aw * bz - az * bw) + (ay * bx - ax * by)
        s = math.sqrt(rx * rx + ry * ry + rz * rz)
        return 2.0 * math.atan2(s, abs(rw))

    def to_matrix(self) -> tuple[Vec3, Vec3, Vec3]:
        """Row-major 3x3 rotation matrix."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return (
            (1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)),
            (2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)),
            (2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)),
        )

    def to_wxyz(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)


def from_rotation_vector(v: Vec3) -> Quaternion:
    """Quaternion for a rotation vector (axis * angle, radians)."""
    vx, vy, vz = v
    angle = math.sqrt(vx * vx + vy * vy + vz * vz)
    if angle < 1e-12:
        # First-order expansion; constructor renormalizes if needed.
        return Quaternion(1.0, 0.5 * vx, 0.5 * vy, 0.5 * vz)
    return Quaternion.from_axis_angle((vx, vy, vz), angle)


def to_rotation_vector(q: Quaternion) -> Vec3:
    """Rotation vector (axis * angle) of q, angle in [0, pi]."""
    s2 = q.x * q.x + q.y * q.y + q.z * q.z
    s = math.sqrt(s2)
    if s < 1e-12:
        return (2.0 * q.x, 2.0 * q.y, 2.0 * q.z)
    angle = 2.0 * math.atan2(s, abs(q.w))
    k = angle / s if q.w >= 0 else -angle / s
    return (q.x * k, q.y * k, q.z * k)


def to_euler_zyx(q: Quaternion) -> tuple[float, float, float]:
    """(roll, pitch, yaw) for the ZYX convention R = Rz(yaw) Ry(pitch) Rx(roll).

    Display and yaw-extraction boundary only; internal math stays in
    quaternions.
    """
    w, x, y, z = q.w, q.x, q.y, q.z
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    pitch = math.asin(max(-1.0, min(1.0, 2.0 * (w * y - z * x))))
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return (roll, pitch, yaw)


def yaw_rotation(yaw: float) -> Quaternion:
    """Rotation about +z (gravity axis) by yaw radians."""
    return Quaternion(math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw))


def slerp(q0: Quaternion, q1: Quaternion, t: float) -> Quaternion:
    """Shortest-arc spherical interpolation.

    t = 0 and t = 1 return the input objects untouched.  Antipodal
    representations are sign-flipped before interpolating so the path never
    takes the long way around.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter {t} outside [0, 1]")
    if t == 0.0:
        return q0
    if t == 1.0:
        return q1
    d = q0.dot(q1)
    sign = 1.0
    if d < 0.0:
        d = -d
        sign = -1.0
    if d > 1.0 - 1e-12:
        # Nearly parallel: linear blend, renormalized by the constructor.
        return Quaternion(
            q0.w + t * (sign * q1.w - q0.w),
            q0.x + t * (sign * q1.x - q0.x),
            q0.y + t * (sign * q1.y - q0.y),
            q0.z + t * (sign * q1.z - q0.z),
        )
    theta = math.acos(min(1.0, d))
    st = math.sin(theta)
    a = math.sin((1.0 - t) * theta) / st
    b = sign * math.sin(t * theta) / st
    return Quaternion(
        a * q0.w + b * q1.w,
        a * q0.x + b * q1.x,
        a * q0.y + b * q1.y,
        a * q0.z + b * q1.z,
    )


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotate by `rotation`, then offset by `translation`."""

    translation: Vec3
    rotation: Quaternion

    def __post_init__(self) -> None:
        tx, ty, tz = self.translation
        if not (math.isfinite(tx) and math.isfinite(ty) and math.isfinite(tz)):
            raise ValueError(f"non-finite translation {self.translation}")
        object.__setattr__(self, "translation", (float(tx), float(ty), float(tz)))

    @classmethod
    def identity(cls) -> Pose:
        return cls((0.0, 0.0, 0.0), Quaternion.identity())

    @classmethod
    def from_wire(cls, values: tuple[float, ...]) -> Pose:
        """Adopt (tx, ty, tz, qw, qx, qy, qz) exactly as stored.

        No finiteness or unit-norm checks; see Quaternion.from_wire.
        """
        p = object.__new__(cls)
        object.__setattr__(p, "translation", (float(values[0]), float(values[1]), float(values[2])))
        object.__setattr__(
            p, "rotation", Quaternion.from_wire(values[3], values[4], values[5], values[6])
        )
        return p

    def to_wire(self) -> tuple[float, ...]:
        t, q = self.translation, self.rotation
        return (t[0], t[1], t[2], q.w, q.x, q.y, q.z)


def identity_pose() -> Pose:
    return Pose.identity()


def compose(a: Pose, b: Pose) -> Pose:
    """a then b, left to right: (a o b)(x) = a(b(x))."""
    rb = a.rotation.rotate(b.translation)
    ta = a.translation
    return Pose(
        (ta[0] + rb[0], ta[1] + rb[1], ta[2] + rb[2]),
        a.rotation.multiply(b.rotation),
    )


def inverse(p: Pose) -> Pose:
    rq = p.rotation.conjugate()
    t = rq.rotate(p.translation)
    return Pose((-t[0] + 0.0, -t[1] + 0.0, -t[2] + 0.0), rq)


def transform_point(p: Pose, point: Vec3) -> Vec3:
    r = p.rotation.rotate(point)
    t = p.translation
    return (t[0] + r[0], t[1] + r[1], t[2] + r[2])


def pose_distance(a: Pose, b: Pose) -> tuple[float, float]:
    """(translational meters, geodesic rotation radians in [0, pi])."""
    dx = a.translation[0] - b.translation[0]
    dy = a.translation[1] - b.translation[1]
    dz = a.translation[2] - b.translation[2]
    return (math.sqrt(dx * dx + dy * dy + dz * dz), a.rotation.angle_to(b.rotation))


@dataclass(frozen=True)
class Extrinsic:
    """Fixed transform along a declared frame edge (parent-from-child)."""

    parent: FrameId
    child: FrameId
    transform: Pose


# Rigidly mounted tip offset along the controller +z axis.  Placeholder rig
# value, not a measured one: replace via config for a real fixture.
DEFAULT_TIP_OFFSET_M = 0.15

_TIP_EDGES = {
    FrameId.LEFT_CONTROLLER: FrameId.LEFT_TIP,
    FrameId.RIGHT_CONTROLLER: FrameId.RIGHT_TIP,
}


def default_tip_extrinsics() -> tuple[Extrinsic, Extrinsic]:
    offset = Pose((0.0, 0.0, DEFAULT_TIP_OFFSET_M), Quaternion.identity())
    return (
        Extrinsic(FrameId.LEFT_CONTROLLER, FrameId.LEFT_TIP, offset),
        Extrinsic(FrameId.RIGHT_CONTROLLER, FrameId.RIGHT_TIP, offset),
    )


def to_tip(controller_pose: Pose, extrinsic: Extrinsic) -> Pose:
    """Map a controller pose to its tip: X_from_tip = X_from_ctrl o ctrl_from_tip.

    The extrinsic must run controller -> matching tip; anything else is a
    frame mismatch.
    """
    expected_child = _TIP_EDGES.get(extrinsic.parent)
    if expected_child is None:
        raise FrameMismatchError(
            f"extrinsic parent {extrinsic.parent.name} is not a controller frame"
        )
    if extrinsic.child != expected_child:
        raise FrameMismatchError(
            f"extrinsic child {extrinsic.child.name} does not match parent "
            f"{extrinsic.parent.name} (expected {expected_child.name})"
        )
    return compose(controller_pose, extrinsic.transform)
