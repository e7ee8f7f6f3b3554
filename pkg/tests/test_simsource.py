"""Scripted streams: determinism, noise statistics, dock and tape scenarios."""

import math

import numpy as np
import pytest

from aumi.calibration import PlaceholderSpec, dock_calibrate
from aumi.geometry import Pose, Quaternion, compose, inverse, pose_distance
from aumi.recording import episode_bytes, read_episode, validate_episode
from aumi.simsource import (
    Interpolation,
    NoiseModel,
    ScriptedTrajectory,
    Waypoint,
    generate_stream,
    load_waypoints,
    simulate_dock,
    simulate_tape_measure,
)
from aumi.streaming import StreamSource, frame_time

WAYPOINT_TEXT = """
# sweep right while closing the gripper
0.0   0 0 0      1 0 0 0   0.08
1.0   0.2 0 0    1 0 0 0   0.04   # halfway
2.0   0.2 0.1 0  0 0 0 1   0.00
"""


def _traj() -> ScriptedTrajectory:
    return load_waypoints(WAYPOINT_TEXT)


# --- waypoint parsing ---------------------------------------------------------------


def test_load_waypoints_scales_and_orders():
    traj = _traj()
    assert [w.time_us for w in traj.waypoints] == [0, 1_000_000, 2_000_000]
    assert traj.span_us == 2_000_000
    assert traj.waypoints[1].width == 0.04


def test_load_waypoints_field_count():
    with pytest.raises(ValueError, match="9 fields"):
        load_waypoints("0.0 1 2 3 1 0 0 0")


def test_trajectory_must_start_at_zero():
    with pytest.raises(ValueError, match="t=0"):
        ScriptedTrajectory((Waypoint(5, Pose.identity(), 0.0),))


def test_trajectory_times_strictly_increase():
    wp = Waypoint(0, Pose.identity(), 0.0)
    with pytest.raises(ValueError, match="strictly increase"):
        ScriptedTrajectory((wp, Waypoint(0, Pose.identity(), 0.0)))


def test_trajectory_needs_a_waypoint():
    with pytest.raises(ValueError):
        ScriptedTrajectory(())


# --- sampling ---------------------------------------------------------------


def test_sample_hits_waypoints_exactly():
    traj = _traj()
    for wp in traj.waypoints:
        pose, width = traj.sample(wp.time_us)
        assert pose == wp.pose and width == wp.width


def test_sample_linear_midpoint():
    pose, width = _traj().sample(500_000)
    assert pose.translation == pytest.approx((0.1, 0.0, 0.0), abs=1e-15)
    assert width == pytest.approx(0.06)


def test_sample_slerps_rotation():
    pose, _ = _traj().sample(1_500_000)
    # Halfway between identity and a 180 degree z flip is a 90 degree yaw.
    s = math.sqrt(0.5)
    assert pose.rotation.w == pytest.approx(s, abs=1e-12)
    assert abs(pose.rotation.z) == pytest.approx(s, abs=1e-12)


def test_sample_hold_mode_steps():
    traj = load_waypoints(WAYPOINT_TEXT, Interpolation.HOLD)
    pose, width = traj.sample(999_999)
    assert pose == traj.waypoints[0].pose and width == 0.08
    pose, _ = traj.sample(1_000_000)
    assert pose == traj.waypoints[1].pose


def test_sample_holds_past_the_end():
    traj = _traj()
    pose, width = traj.sample(9_000_000)
    assert pose == traj.waypoints[-1].pose and width == 0.0


def test_sample_bisection_matches_linear_scan():
    traj = _traj()

    def scan(t):
        points = traj.waypoints
        for a, b in zip(points, points[1:]):
            if a.time_us <= t < b.time_us:
                return a, b
        return points[-1], None

    rng = np.random.default_rng(5)
    for t in rng.integers(0, 2_200_000, size=200):
        t = int(t)
        a, b = scan(t)
        pose, _ = traj.sample(t)
        if b is None:
            assert pose == a.pose
        else:
            lo = np.array(a.pose.translation)
            hi = np.array(b.pose.translation)
            u = (t - a.time_us) / (b.time_us - a.time_us)
            assert pose.translation == pytest.approx(tuple(lo + u * (hi - lo)), abs=1e-12)


# --- stream generation ---------------------------------------------------------------


def test_noiseless_stream_is_the_script_on_the_grid():
    samples = generate_stream(_traj(), NoiseModel(), 30.0, 2.0, StreamSource.LEFT_CONTROLLER)
    assert len(samples) == 61
    for k, s in enumerate(samples):
        assert s.seq == k
        assert s.device_time == frame_time(k, 30.0)
        pose, width = _traj().sample(s.device_time)
        assert s.pose == pose
        assert s.gripper_width == width


def test_stream_is_deterministic():
    noise = NoiseModel(translational_sigma=0.002, rotational_sigma=0.01,
                       jitter_sigma_us=500.0, drift_rate=0.001, seed=42)
    a = generate_stream(_traj(), noise, 30.0, 2.0, StreamSource.RIGHT_CONTROLLER)
    b = generate_stream(_traj(), noise, 30.0, 2.0, StreamSource.RIGHT_CONTROLLER)
    assert a == b


def test_streams_differ_across_sources_and_seeds():
    noise = NoiseModel(translational_sigma=0.002, seed=42)
    left = generate_stream(_traj(), noise, 30.0, 2.0, StreamSource.LEFT_CONTROLLER)
    right = generate_stream(_traj(), noise, 30.0, 2.0, StreamSource.RIGHT_CONTROLLER)
    reseeded = generate_stream(_traj(), NoiseModel(translational_sigma=0.002, seed=43),
                               30.0, 2.0, StreamSource.LEFT_CONTROLLER)
    assert left != right
    assert left != reseeded


def test_hmd_carries_no_width():
    samples = generate_stream(_traj(), NoiseModel(), 30.0, 1.0, StreamSource.HMD)
    assert all(s.gripper_width is None for s in samples)


def test_latency_shifts_timestamps():
    noise = NoiseModel(latency_us=40_000)
    samples = generate_stream(_traj(), noise, 30.0, 1.0, StreamSource.HMD)
    assert all(s.device_time == frame_time(k, 30.0) + 40_000 for k, s in enumerate(samples))


def test_jitter_never_breaks_monotonicity():
    noise = NoiseModel(jitter_sigma_us=30_000.0, seed=9)
    samples = generate_stream(_traj(), noise, 120.0, 2.0, StreamSource.HMD)
    times = [s.device_time for s in samples]
    assert times == sorted(times)
    assert any(s.device_time != frame_time(k, 120.0) for k, s in enumerate(samples))


def test_duration_cannot_outrun_script():
    with pytest.raises(ValueError, match="scripted span"):
        generate_stream(_traj(), NoiseModel(), 30.0, 2.5, StreamSource.HMD)


def test_start_seq_offsets_numbering():
    samples = generate_stream(_traj(), NoiseModel(), 30.0, 0.5, StreamSource.HMD,
                              start_seq=100)
    assert [s.seq for s in samples[:3]] == [100, 101, 102]


def test_translational_noise_statistics():
    sigma = 0.002
    noise = NoiseModel(translational_sigma=sigma, seed=77)
    samples = generate_stream(_traj(), noise, 240.0, 2.0, StreamSource.LEFT_CONTROLLER)
    errors = []
    for s in samples:
        scripted, _ = _traj().sample(s.device_time)
        errors.extend(a - b for a, b in zip(s.pose.translation, scripted.translation))
    errors = np.array(errors)  # 3 * 481 draws
    assert abs(errors.mean()) < 4 * sigma / math.sqrt(errors.size)
    assert errors.std() == pytest.approx(sigma, rel=0.12)


def test_rotational_noise_statistics():
    sigma = 0.02
    noise = NoiseModel(rotational_sigma=sigma, seed=78)
    samples = generate_stream(_traj(), noise, 240.0, 2.0, StreamSource.LEFT_CONTROLLER)
    angles = []
    for s in samples:
        scripted, _ = _traj().sample(s.device_time)
        angles.append(pose_distance(scripted, s.pose)[1])
    angles = np.array(angles)
    # Angles are |gauss(sigma)|, mean sigma * sqrt(2/pi).
    assert angles.min() >= 0.0
    assert angles.mean() == pytest.approx(sigma * math.sqrt(2 / math.pi), rel=0.15)


def test_drift_moves_along_one_direction():
    rate = 0.01  # m/s
    noise = NoiseModel(drift_rate=rate, seed=5)
    samples = generate_stream(_traj(), noise, 30.0, 2.0, StreamSource.HMD)
    offsets = []
    for s in samples:
        scripted, _ = _traj().sample(s.device_time)
        offsets.append(np.array(s.pose.translation) - np.array(scripted.translation))
    assert np.linalg.norm(offsets[0]) == 0.0
    last = offsets[-1]
    assert np.linalg.norm(last) == pytest.approx(rate * 2.0, rel=1e-9)
    # Collinear: all offsets are nonnegative multiples of the final one.
    direction = last / np.linalg.norm(last)
    for k, off in enumerate(offsets):
        assert np.linalg.norm(off - direction * (rate * frame_time(k, 30.0) / 1e6)) < 1e-12


def test_noise_model_rejects_negatives():
    with pytest.raises(ValueError):
        NoiseModel(translational_sigma=-1.0)
    with pytest.raises(ValueError):
        NoiseModel(latency_us=-5)


# --- dock scenario ---------------------------------------------------------------


def _spec() -> PlaceholderSpec:
    left = Pose((-0.3, 0.1, 0.02), Quaternion(1.0, 0.0, 0.0, 0.0))
    right = Pose((0.3, 0.1, 0.02), Quaternion(math.sqrt(0.5), 0.0, 0.0, math.sqrt(0.5)))
    return PlaceholderSpec(left, right)


def test_simulate_dock_inverts_the_calibration():
    world_from_tracking = Pose((0.4, -0.2, 0.05),
                               Quaternion(0.9, 0.1, -0.2, 0.3))
    raw_left, raw_right = simulate_dock(_spec(), world_from_tracking, NoiseModel())
    spec = _spec()
    for raw, seat in ((raw_left, spec.left_dock_in_world),
                      (raw_right, spec.right_dock_in_world)):
        dt, dr = pose_distance(compose(world_from_tracking, raw), seat)
        assert dt < 1e-12 and dr < 1e-12


def test_simulate_dock_feeds_calibration_recovery():
    world_from_tracking = Pose((0.12, 0.34, -0.05), Quaternion(0.7, -0.3, 0.4, 0.1))
    raw_left, raw_right = simulate_dock(_spec(), world_from_tracking, NoiseModel())
    state = dock_calibrate(raw_left, raw_right, _spec(), event_time=50)
    dt, dr = pose_distance(state.world_from_tracking, world_from_tracking)
    assert dt < 1e-9 and dr < 1e-9
    assert state.established_at == 50


def test_simulate_dock_noise_is_deterministic():
    noise = NoiseModel(translational_sigma=0.001, seed=3)
    a = simulate_dock(_spec(), Pose.identity(), noise)
    b = simulate_dock(_spec(), Pose.identity(), noise)
    assert a == b
    clean = simulate_dock(_spec(), Pose.identity(), NoiseModel())
    assert a != clean


# --- tape measure scenario ---------------------------------------------------------------


def test_tape_measure_episode_shape():
    episodes = simulate_tape_measure((0.5, 0.3), NoiseModel())
    assert [n for n, _ in episodes] == [0.5, 0.3]
    for nominal, ep in episodes:
        assert ep.header.extra_dict()["nominal_m"] == repr(nominal)
        assert validate_episode(ep) == []
        assert len(ep.frames) == 61


def test_tape_measure_holds_exact_separation():
    (_, ep), = simulate_tape_measure((0.3,), NoiseModel())
    hold = [f for f in ep.frames if f.timeline_time >= 1_000_000]
    assert len(hold) >= 30
    for f in hold:
        sep = math.dist(f.left_tip.translation, f.right_tip.translation)
        assert sep == 0.3  # halving then doubling is exact in binary


def test_tape_measure_approach_starts_wide():
    (_, ep), = simulate_tape_measure((0.3,), NoiseModel())
    first = ep.frames[0]
    sep = math.dist(first.left_tip.translation, first.right_tip.translation)
    assert sep == pytest.approx(0.4, abs=1e-12)


def test_tape_measure_round_trips_and_is_deterministic():
    noise = NoiseModel(translational_sigma=0.002, seed=21)
    a = simulate_tape_measure((0.5,), noise)[0][1]
    b = simulate_tape_measure((0.5,), noise)[0][1]
    assert episode_bytes(a) == episode_bytes(b)
    assert read_episode(episode_bytes(a)) == a


def test_tape_measure_trials_use_independent_streams():
    noise = NoiseModel(translational_sigma=0.002, seed=21)
    episodes = simulate_tape_measure((0.5, 0.5), noise)
    assert episode_bytes(episodes[0][1]) != episode_bytes(episodes[1][1])


def test_tape_measure_rejects_bad_nominals():
    with pytest.raises(ValueError):
        simulate_tape_measure((0.0,), NoiseModel())
    with pytest.raises(ValueError):
        simulate_tape_measure((-0.1,), NoiseModel())
