"""Synthetic device streams for tests, demos, and protocol rehearsal.

Everything here is a pure function of (arguments, seed): scripted
trajectories are evaluated on the tick grid, perturbed by a NoiseModel,
and emitted as the same StreamSample objects a live tracker would produce.
Randomness comes exclusively from aumi.rng.Pcg32, one derived stream per
consumer, so a seeded run is reproducible byte for byte anywhere.

Waypoint text format, one per line, '#' comments allowed:

    t_s  tx  ty  tz  qw  qx  qy  qz  width
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from aumi.calibration import CalibrationState, PlaceholderSpec
from aumi.geometry import (
    Extrinsic,
    Pose,
    Quaternion,
    compose,
    default_tip_extrinsics,
    from_rotation_vector,
    inverse,
    slerp,
)
from aumi.recording import Episode, EpisodeHeader, SourceKind
from aumi.rng import (
    Pcg32,
    STREAM_DOCK,
    STREAM_SOURCE_BASE,
    STREAM_TAPE_BASE,
)
from aumi.streaming import (
    StreamSample,
    StreamSource,
    SyncedFrame,
    VALID_ALL,
    frame_time,
)

__all__ = [
    "Interpolation",
    "NoiseModel",
    "ScriptedTrajectory",
    "Waypoint",
    "generate_stream",
    "load_waypoints",
    "simulate_dock",
    "simulate_tape_measure",
    "Pcg32",
]


class Interpolation(enum.Enum):
    LINEAR_SLERP = "linear_slerp"
    HOLD = "hold"


@dataclass(frozen=True)
class NoiseModel:
    """Per-sample corruption applied to a scripted stream.

    translational_sigma  meters, per axis
    rotational_sigma     radians about a uniformly random axis
    latency_us           constant reporting delay
    jitter_sigma_us      gaussian timestamp jitter (clamped to keep
                         device_time non-decreasing)
    drift_rate           meters per second along a seeded fixed direction
    """

    translational_sigma: float = 0.0
    rotational_sigma: float = 0.0
    latency_us: int = 0
    jitter_sigma_us: float = 0.0
    drift_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("translational_sigma", "rotational_sigma", "jitter_sigma_us"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.latency_us < 0:
            raise ValueError("latency_us must be nonnegative")

    @property
    def silent(self) -> bool:
        return (
            self.translational_sigma == 0.0
            and self.rotational_sigma == 0.0
            and self.jitter_sigma_us == 0.0
            and self.drift_rate == 0.0
        )


@dataclass(frozen=True)
class Waypoint:
    time_us: int
    pose: Pose
    width: float


@dataclass(frozen=True)
class ScriptedTrajectory:
    waypoints: tuple[Waypoint, ...]
    interpolation: Interpolation = Interpolation.LINEAR_SLERP

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ValueError("a trajectory needs at least one waypoint")
        if self.waypoints[0].time_us != 0:
            raise ValueError("the first waypoint must sit at t=0")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if b.time_us <= a.time_us:
                raise ValueError(
                    f"waypoint times must strictly increase ({a.time_us} -> {b.time_us})"
                )

    @property
    def span_us(self) -> int:
        return self.waypoints[-1].time_us

    def sample(self, t_us: int) -> tuple[Pose, float]:
        """Pose and width at t_us; holds the last waypoint past the end."""
        points = self.waypoints
        if t_us >= points[-1].time_us:
            last = points[-1]
            return (last.pose, last.width)
        lo, hi = 0, len(points) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if points[mid].time_us <= t_us:
                lo = mid
            else:
                hi = mid
        a, b = points[lo], points[lo + 1]
        if self.interpolation == Interpolation.HOLD or t_us == a.time_us:
            return (a.pose, a.width)
        u = (t_us - a.time_us) / (b.time_us - a.time_us)
        pa, pb = a.pose.translation, b.pose.translation
        trans = (
            pa[0] + u * (pb[0] - pa[0]),
            pa[1] + u * (pb[1] - pa[1]),
            pa[2] + u * (pb[2] - pa[2]),
        )
        rot = slerp(a.pose.rotation, b.pose.rotation, u)
        width = a.width + u * (b.width - a.width)
        return (Pose(trans, rot), width)


def load_waypoints(
    text: str, interpolation: Interpolation = Interpolation.LINEAR_SLERP
) -> ScriptedTrajectory:
    waypoints = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 9:
            raise ValueError(f"waypoint line {lineno}: expected 9 fields, got {len(parts)}")
        vals = [float(p) for p in parts]
        waypoints.append(
            Waypoint(
                round(vals[0] * 1_000_000),
                Pose((vals[1], vals[2], vals[3]), Quaternion(vals[4], vals[5], vals[6], vals[7])),
                vals[8],
            )
        )
    return ScriptedTrajectory(tuple(waypoints), interpolation)


def _perturb_pose(pose: Pose, noise: NoiseModel, rng: Pcg32, drift: tuple[float, float, float], t_us: int) -> Pose:
    tx, ty, tz = pose.translation
    if noise.drift_rate != 0.0:
        d = noise.drift_rate * (t_us / 1_000_000)
        tx, ty, tz = tx + d * drift[0], ty + d * drift[1], tz + d * drift[2]
    if noise.translational_sigma > 0.0:
        tx += rng.gauss(noise.translational_sigma)
        ty += rng.gauss(noise.translational_sigma)
        tz += rng.gauss(noise.translational_sigma)
    rot = pose.rotation
    if noise.rotational_sigma > 0.0:
        axis = rng.unit_vector()
        angle = rng.gauss(noise.rotational_sigma)
        wobble = from_rotation_vector((axis[0] * angle, axis[1] * angle, axis[2] * angle))
        rot = wobble.multiply(rot)
    return Pose((tx, ty, tz), rot)


def generate_stream(
    traj: ScriptedTrajectory,
    noise: NoiseModel,
    rate: float,
    duration_s: float,
    source: StreamSource,
    *,
    start_seq: int = 0,
) -> list[StreamSample]:
    """Sample the trajectory on the tick grid as one device's stream.

    Timestamps are tick + latency + jitter, clamped so device_time never
    decreases.  The HMD source carries no gripper width.  Consumption of
    the per-source random stream is fixed (drift direction, then per
    sample: 3 translation gaussians, axis + angle, jitter), so outputs are
    reproducible for a given (noise.seed, source).
    """
    duration_us = round(duration_s * 1_000_000)
    if duration_us > traj.span_us:
        raise ValueError(
            f"duration {duration_s} s runs past the scripted span of "
            f"{traj.span_us / 1e6} s"
        )
    rng = Pcg32(noise.seed, STREAM_SOURCE_BASE + int(source))
    drift = rng.unit_vector() if noise.drift_rate != 0.0 else (0.0, 0.0, 0.0)
    samples: list[StreamSample] = []
    prev_time = 0
    k = 0
    while True:
        t = frame_time(k, rate)
        if t > duration_us:
            break
        pose, width = traj.sample(t)
        pose = _perturb_pose(pose, noise, rng, drift, t)
        device_time = t + noise.latency_us
        if noise.jitter_sigma_us > 0.0:
            device_time += round(rng.gauss(noise.jitter_sigma_us))
        device_time = max(device_time, prev_time)
        prev_time = device_time
        samples.append(
            StreamSample(
                source=source,
                seq=start_seq + k,
                device_time=device_time,
                pose=pose,
                gripper_width=None if source == StreamSource.HMD else width,
            )
        )
        k += 1
    return samples


def simulate_dock(
    spec: PlaceholderSpec, world_from_tracking: Pose, noise: NoiseModel
) -> tuple[Pose, Pose]:
    """Raw tip poses a tracker calibrated by world_from_tracking would
    report with both tips seated, plus seating noise."""
    tracking_from_world = inverse(world_from_tracking)
    rng = Pcg32(noise.seed, STREAM_DOCK)
    out = []
    for seat in (spec.left_dock_in_world, spec.right_dock_in_world):
        raw = compose(tracking_from_world, seat)
        out.append(_perturb_pose(raw, noise, rng, (0.0, 0.0, 0.0), 0))
    return (out[0], out[1])


TAPE_APPROACH_S = 1.0
TAPE_HOLD_S = 1.0


def simulate_tape_measure(
    nominals: tuple[float, ...],
    noise: NoiseModel,
    rate: float = 30.0,
    *,
    task_name: str = "tape_measure",
    operator_id: str = "sim",
    extrinsics: tuple[Extrinsic, ...] | None = None,
) -> list[tuple[float, Episode]]:
    """One episode per nominal separation, ready for the replay protocol.

    The tips close in from 5 cm outside their marks during the first
    second, then hold the exact nominal separation (before noise) for the
    final second, which covers the protocol's stable window.  The head
    hovers behind the midpoint.  Deterministic for a given (noise, rate).
    """
    if extrinsics is None:
        extrinsics = default_tip_extrinsics()
    episodes: list[tuple[float, Episode]] = []
    duration_us = round((TAPE_APPROACH_S + TAPE_HOLD_S) * 1_000_000)
    approach_us = round(TAPE_APPROACH_S * 1_000_000)
    head = Pose((0.0, -0.35, 0.45), Quaternion.identity())
    for trial, nominal in enumerate(nominals):
        if not (nominal > 0 and math.isfinite(nominal)):
            raise ValueError(f"nominal separation must be positive, got {nominal}")
        rng = Pcg32(noise.seed, STREAM_TAPE_BASE + trial)
        frames = []
        k = 0
        while True:
            t = frame_time(k, rate)
            if t > duration_us:
                break
            if t >= approach_us:
                reach = 0.0
            else:
                reach = 0.05 * (1.0 - t / approach_us)
            half = nominal / 2 + reach
            left = Pose((-half, 0.0, 0.0), Quaternion.identity())
            right = Pose((half, 0.0, 0.0), Quaternion.identity())
            if not noise.silent:
                left = _perturb_pose(left, noise, rng, (0.0, 0.0, 0.0), t)
                right = _perturb_pose(right, noise, rng, (0.0, 0.0, 0.0), t)
            frames.append(
                SyncedFrame(
                    index=k,
                    timeline_time=t,
                    left_tip=left,
                    right_tip=right,
                    head=head,
                    left_width=0.02,
                    right_width=0.02,
                    validity=VALID_ALL,
                )
            )
            k += 1
        header = EpisodeHeader(
            task_name=task_name,
            operator_id=operator_id,
            source_kind=SourceKind.ACTIVEUMI,
            rate=rate,
            calibration=CalibrationState.initial(),
            extrinsics=extrinsics,
            created_at=0,
            extra=(("nominal_m", repr(float(nominal))),),
        )
        episodes.append((nominal, Episode.from_frames(header, frames)))
    return episodes
