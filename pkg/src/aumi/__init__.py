"""Desk-scale teleoperation data pipeline.

Subpackages cover pose algebra (geometry), operator calibration
(calibration), wire protocol and time alignment (streaming), episode files
and mix manifests (recording), replay-precision evaluation (replay_eval),
synthetic device sources (simsource), and the command line (cli).
"""

from aumi.geometry import (
    Extrinsic,
    FrameId,
    FrameMismatchError,
    Pose,
    Quaternion,
    compose,
    inverse,
    pose_distance,
    slerp,
    to_tip,
)

__all__ = [
    "Extrinsic",
    "FrameId",
    "FrameMismatchError",
    "Pose",
    "Quaternion",
    "compose",
    "inverse",
    "pose_distance",
    "slerp",
    "to_tip",
]
