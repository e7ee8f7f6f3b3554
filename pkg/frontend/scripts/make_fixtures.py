#!/usr/bin/env python3
"""Regenerate the fixture corpus from the producing pipeline.

Run from anywhere: paths are resolved relative to this file. Every fixture
is deterministic, so reruns only change bytes when the producer changes.

  corpus/ep_NNN.aumi + .tsv   100 random episodes and their canonical dumps
  golden/                     the producer's frozen 3-frame golden episode
  zero_frame.aumi + .tsv      empty episode, valid header
  corrupt/ + expected.json    one file per reader error class; the json maps
                              each file to the error the producer's own
                              reader raises, recorded at generation time
  mix.manifest + mix.expected.json
"""

import json
import struct
import sys
import zlib
from pathlib import Path

import numpy as np

from aumi.calibration import CalibrationMethod, CalibrationState
from aumi.cli import dump_episode
from aumi.geometry import Extrinsic, FrameId, Pose, Quaternion
from aumi.recording import (
    Episode,
    EpisodeHeader,
    ManifestEntry,
    SourceKind,
    build_mix_manifest,
    episode_bytes,
    format_manifest,
    read_episode,
)
from aumi.streaming import SyncedFrame, frame_time

HERE = Path(__file__).resolve().parent
FIXTURES = HERE.parent / "fixtures"
GOLDEN_SRC = HERE.parents[1] / "tests" / "golden" / "episode_3frame.aumi"

TASKS = ("wipe_board", "fold_towel", "tape_measure", "sortier_übung", "拭き取り")
OPERATORS = ("op01", "op02", "sim", "帳票")
EXTRA_POOL = (
    ("nominal_m", lambda rng: repr(float(rng.uniform(0.1, 1.0)))),
    ("rig", lambda rng: "bench-a"),
    ("note", lambda rng: "Handgelenk prüfen"),
    ("take", lambda rng: str(int(rng.integers(1, 40)))),
)
EXTRINSIC_POOL = (
    (FrameId.LEFT_CONTROLLER, FrameId.LEFT_TIP),
    (FrameId.RIGHT_CONTROLLER, FrameId.RIGHT_TIP),
    (FrameId.HEAD, FrameId.ROBOT_HEAD_CAM),
    (FrameId.WORLD, FrameId.ROBOT_BASE),
)


def random_quat(rng) -> Quaternion:
    w, x, y, z = rng.normal(size=4)
    return Quaternion(w, x, y, z)  # constructor normalizes


def random_pose(rng) -> Pose:
    t = rng.uniform(-0.6, 0.6, size=3)
    return Pose((float(t[0]), float(t[1]), float(t[2])), random_quat(rng))


def random_episode(rng, index: int) -> Episode:
    rate = float(rng.choice((30.0, 60.0, 7.5)))
    n_frames = int(rng.integers(0, 51))
    extras = []
    for key, make in EXTRA_POOL:
        if rng.random() < 0.4:
            extras.append((key, make(rng)))
    extrinsics = tuple(
        Extrinsic(parent, child, random_pose(rng))
        for parent, child in EXTRINSIC_POOL
        if rng.random() < 0.6
    )
    header = EpisodeHeader(
        task_name=str(rng.choice(TASKS)),
        operator_id=str(rng.choice(OPERATORS)),
        source_kind=SourceKind.TELEOP if index % 5 == 4 else SourceKind.ACTIVEUMI,
        rate=rate,
        calibration=CalibrationState(
            random_pose(rng),
            CalibrationMethod.DOCK if rng.random() < 0.5 else CalibrationMethod.ZERO_POINT_RESET,
            int(rng.integers(0, 2**48)),
        ),
        extrinsics=extrinsics,
        created_at=int(rng.integers(0, 2**52)) if index % 3 else 0,
        extra=tuple(sorted(extras)),
    )
    events_by_frame: dict[int, list[int]] = {}
    if n_frames:
        codes = [int(c) for c in rng.choice((1, 2, 3, 4, 9, 250), size=int(rng.integers(0, 4)))]
        for code in codes:
            events_by_frame.setdefault(int(rng.integers(0, n_frames)), []).append(code)
    frames = []
    for k in range(n_frames):
        left = random_pose(rng)
        if index == 17 and k == 0:
            # non-finite translation: legal in the container, flagged only
            # by validation; proves the dump is bit-exact beyond normals
            q = left.rotation
            left = Pose.from_wire((float("inf"), 0.0, -0.0, q.w, q.x, q.y, q.z))
        width = float(rng.uniform(0.0, 0.12))
        if index == 23 and k == 1:
            width = 5e-324  # smallest denormal
        frames.append(
            SyncedFrame(
                index=k,
                timeline_time=frame_time(k, rate),
                left_tip=left,
                right_tip=random_pose(rng),
                head=random_pose(rng),
                left_width=width,
                right_width=float(rng.uniform(0.0, 0.12)),
                validity=int(rng.integers(0, 8)),
                events=tuple(events_by_frame.get(k, ())),
            )
        )
    return Episode.from_frames(header, frames)


def reseal(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body))


def write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def main() -> int:
    rng = np.random.default_rng(2026)

    corpus = FIXTURES / "corpus"
    manifest_entries = []
    for i in range(100):
        ep = random_episode(rng, i)
        data = episode_bytes(ep)
        write(corpus / f"ep_{i:03d}.aumi", data)
        write(corpus / f"ep_{i:03d}.tsv", dump_episode(ep).encode("utf-8"))
        manifest_entries.append(
            ManifestEntry(
                ep.header.source_kind,
                f"corpus/ep_{i:03d}.aumi",
                len(ep.frames),
                zlib.crc32(data[:-4]),
            )
        )

    golden = GOLDEN_SRC.read_bytes()
    write(FIXTURES / "golden" / "episode_3frame.aumi", golden)
    write(
        FIXTURES / "golden" / "episode_3frame.tsv",
        dump_episode(read_episode(golden)).encode("utf-8"),
    )

    empty = Episode.from_frames(
        EpisodeHeader(
            task_name="empty",
            operator_id="op01",
            source_kind=SourceKind.ACTIVEUMI,
            rate=30.0,
            calibration=CalibrationState.initial(),
            extrinsics=(),
        ),
        [],
    )
    write(FIXTURES / "zero_frame.aumi", episode_bytes(empty))
    write(FIXTURES / "zero_frame.tsv", dump_episode(empty).encode("utf-8"))

    # One corrupted file per error class. truncated.aumi is resealed so the
    # CRC passes and the structural walk is what fails; crc_flip.aumi flips
    # one payload byte so only the checksum can notice.
    corrupt = {}
    bad_magic = bytearray(golden)
    bad_magic[0:4] = b"XUMI"
    corrupt["bad_magic.aumi"] = bytes(bad_magic)
    flipped = bytearray(golden)
    flipped[40] ^= 0x01
    corrupt["crc_flip.aumi"] = bytes(flipped)
    corrupt["truncated.aumi"] = reseal(golden[: len(golden) - 4 - 150])
    version = bytearray(golden[:-4])
    version[4] = 2
    corrupt["unsupported_version.aumi"] = reseal(bytes(version))

    expected = {}
    for name, data in corrupt.items():
        write(FIXTURES / "corrupt" / name, data)
        try:
            read_episode(data)
        except Exception as exc:  # noqa: BLE001 - recording the class is the point
            expected[name] = type(exc).__name__
        else:
            raise SystemExit(f"{name} unexpectedly parsed")
    write(
        FIXTURES / "corrupt" / "expected.json",
        json.dumps(expected, indent=2, sort_keys=True).encode("utf-8") + b"\n",
    )

    active = [e for e in manifest_entries if e.source_kind is SourceKind.ACTIVEUMI]
    teleop = [e for e in manifest_entries if e.source_kind is SourceKind.TELEOP]
    manifest = build_mix_manifest(active, teleop, 0.25, seed=7)
    text = format_manifest(manifest)
    write(FIXTURES / "mix.manifest", text.encode("utf-8"))
    write(
        FIXTURES / "mix.expected.json",
        json.dumps(
            {
                "ratio_requested": manifest.mix_ratio_requested,
                "seed": manifest.seed,
                "notes": list(manifest.notes),
                "entries": [
                    {
                        "source_kind": e.source_kind.value,
                        "path": e.path,
                        "frame_count": e.frame_count,
                        "checksum": e.checksum,
                    }
                    for e in manifest.entries
                ],
            },
            indent=2,
        ).encode("utf-8")
        + b"\n",
    )

    print(f"fixtures written under {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
