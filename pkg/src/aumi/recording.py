"""Episode files and dataset mix manifests.

Episode container, all integers and floats little-endian:

    offset  size  field
    0       4     magic "AUMI"
    4       2     u16 format version (currently 1)
    6       4     u32 metadata length
    10      var   UTF-8 metadata, "key=value" lines joined by \\n
    .       57    calibration: 7 x f64 pose, u8 method
    .       1     u8 extrinsic count, then per record:
    .       58      u8 parent frame, u8 child frame, 7 x f64 pose
    .       8     f64 timeline rate (Hz)
    .       8     u64 frame count, then per frame (202 bytes):
    .       8       u64 timeline time (us)
    .       1       u8 validity bits (1 left, 2 right, 4 head)
    .       7       zero padding (keeps the record 8-byte aligned)
    .       168     3 x pose (left tip, right tip, head), 7 x f64 each
    .       16      f64 left width, f64 right width
    .       2       u16 event count for this frame
    .       4     u32 total event count, then per event (9 bytes):
    .       9       u64 frame index, u8 code
    end-4   4     u32 CRC-32 (IEEE, zlib) over every preceding byte

Pose fields are always (tx, ty, tz, qw, qx, qy, qz).  The trailing event
section is authoritative; the per-frame counts exist so a reader can size
buffers in one pass.  read_episode is total: arbitrary bytes produce either
an Episode or one of BadMagic / UnsupportedVersion / CrcMismatch /
TruncatedFile.  The CRC is checked before any structural field is trusted,
so a single corrupt byte anywhere past the version field surfaces as
CrcMismatch rather than as garbage counts.

The mix manifest is a line-oriented UTF-8 text file:

    # aumi mix manifest
    # ratio_requested = 0.01
    # seed = 42
    # activeumi_count = 1000
    # teleop_count = 10
    <source_kind> TAB <path> TAB <frame_count> TAB <crc32 hex>
"""

from __future__ import annotations

import enum
import math
import struct
import zlib
from dataclasses import dataclass, field
from typing import BinaryIO, Sequence

from aumi.geometry import Extrinsic, FrameId, Pose
from aumi.calibration import CalibrationMethod, CalibrationState
from aumi.rng import Pcg32, STREAM_MANIFEST_MIX
from aumi.streaming import SyncedFrame, VALID_HEAD, VALID_LEFT, VALID_RIGHT, frame_time

MAGIC = b"AUMI"
FORMAT_VERSION = 1

_FIXED_HEAD = struct.Struct("<4sHI")
_CALIBRATION = struct.Struct("<7dB")
_EXTRINSIC = struct.Struct("<BB7d")
_RATE_COUNT = struct.Struct("<dQ")
_FRAME = struct.Struct("<QB7x7d7d7dddH")
_EVENT = struct.Struct("<QB")
_CRC = struct.Struct("<I")

# Smallest structurally possible file: empty metadata, no extrinsics,
# no frames, no events.
_MIN_FILE_SIZE = (
    _FIXED_HEAD.size + _CALIBRATION.size + 1 + _RATE_COUNT.size + 4 + _CRC.size
)

DEFAULT_MAX_WIDTH_M = 0.12
DEFAULT_GAP_LIMIT = 10


class EpisodeError(ValueError):
    """Base for episode file read failures."""


class BadMagic(EpisodeError):
    pass


class UnsupportedVersion(EpisodeError):
    pass


class CrcMismatch(EpisodeError):
    pass


class TruncatedFile(EpisodeError):
    pass


class EmptyTeleopPool(ValueError):
    pass


class SourceKind(str, enum.Enum):
    ACTIVEUMI = "activeumi"
    TELEOP = "teleop"


@dataclass(frozen=True)
class EpisodeHeader:
    task_name: str
    operator_id: str
    source_kind: SourceKind
    rate: float
    calibration: CalibrationState
    extrinsics: tuple[Extrinsic, ...]
    created_at: int = 0  # microseconds
    format_version: int = FORMAT_VERSION
    extra: tuple[tuple[str, str], ...] = ()  # sorted (key, value) metadata

    def extra_dict(self) -> dict[str, str]:
        return dict(self.extra)


@dataclass(frozen=True)
class Episode:
    header: EpisodeHeader
    frames: tuple[SyncedFrame, ...]
    events: tuple[tuple[int, int], ...]  # (frame index, code), file order

    @classmethod
    def from_frames(cls, header: EpisodeHeader, frames: Sequence[SyncedFrame]) -> Episode:
        """Build with the flat event list derived from the frames."""
        events = tuple(
            (k, code) for k, frame in enumerate(frames) for code in frame.events
        )
        return cls(header, tuple(frames), events)


_STANDARD_KEYS = ("task_name", "operator_id", "source_kind", "created_at",
                  "calibration_established_at")


def _metadata_block(header: EpisodeHeader) -> bytes:
    pairs = [
        ("task_name", header.task_name),
        ("operator_id", header.operator_id),
        ("source_kind", header.source_kind.value),
        ("created_at", str(header.created_at)),
        ("calibration_established_at", str(header.calibration.established_at)),
    ]
    pairs.extend(sorted(header.extra))
    lines = []
    for key, value in pairs:
        if "=" in key or "\n" in key or "\n" in value:
            raise ValueError(f"metadata key/value not encodable: {key!r}={value!r}")
        lines.append(f"{key}={value}")
    return "\n".join(lines).encode("utf-8")


def episode_bytes(ep: Episode) -> bytes:
    """Serialize; write_episode and checksums build on this."""
    header = ep.header
    out = bytearray()
    meta = _metadata_block(header)
    out += _FIXED_HEAD.pack(MAGIC, header.format_version, len(meta))
    out += meta
    out += _CALIBRATION.pack(
        *header.calibration.world_from_tracking.to_wire(),
        int(header.calibration.method),
    )
    if len(header.extrinsics) > 255:
        raise ValueError("at most 255 extrinsics fit the header")
    out += bytes([len(header.extrinsics)])
    for ext in header.extrinsics:
        out += _EXTRINSIC.pack(int(ext.parent), int(ext.child), *ext.transform.to_wire())
    out += _RATE_COUNT.pack(header.rate, len(ep.frames))

    counts = [0] * len(ep.frames)
    for frame_idx, _ in ep.events:
        if not 0 <= frame_idx < len(ep.frames):
            raise ValueError(f"event references frame {frame_idx} of {len(ep.frames)}")
        counts[frame_idx] += 1
    for k, frame in enumerate(ep.frames):
        out += _FRAME.pack(
            frame.timeline_time,
            frame.validity,
            *frame.left_tip.to_wire(),
            *frame.right_tip.to_wire(),
            *frame.head.to_wire(),
            frame.left_width,
            frame.right_width,
            counts[k],
        )
    out += struct.pack("<I", len(ep.events))
    for frame_idx, code in ep.events:
        out += _EVENT.pack(frame_idx, code)
    out += _CRC.pack(zlib.crc32(bytes(out)))
    return bytes(out)


def write_episode(ep: Episode, sink: BinaryIO) -> int:
    data = episode_bytes(ep)
    sink.write(data)
    return len(data)


def read_episode(data: bytes) -> Episode:
    """Parse episode bytes; total over arbitrary input (see module doc)."""
    prefix = data[:4]
    if prefix != MAGIC[: len(prefix)]:
        raise BadMagic(f"expected {MAGIC!r}, got {prefix!r}")
    if len(data) < _MIN_FILE_SIZE:
        raise TruncatedFile(
            f"{len(data)} bytes is below the {_MIN_FILE_SIZE}-byte structural minimum"
        )
    _, version, meta_len = _FIXED_HEAD.unpack_from(data)
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format version {version}, reader supports {FORMAT_VERSION}")

    stored_crc = _CRC.unpack_from(data, len(data) - _CRC.size)[0]
    actual_crc = zlib.crc32(data[: len(data) - _CRC.size])
    if stored_crc != actual_crc:
        raise CrcMismatch(f"stored crc {stored_crc:08x}, computed {actual_crc:08x}")

    view = memoryview(data)
    pos = _FIXED_HEAD.size

    def need(n: int, what: str) -> int:
        nonlocal pos
        if pos + n > len(data) - _CRC.size:
            raise TruncatedFile(f"file ends inside {what}")
        start = pos
        pos += n
        return start

    meta_start = need(meta_len, "metadata")
    try:
        meta_text = bytes(view[meta_start : meta_start + meta_len]).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise TruncatedFile(f"metadata is not UTF-8: {exc}") from None
    meta: dict[str, str] = {}
    if meta_text:
        for line in meta_text.split("\n"):
            key, sep, value = line.partition("=")
            if not sep:
                raise TruncatedFile(f"metadata line without '=': {line!r}")
            meta[key] = value

    def meta_int(key: str) -> int:
        raw = meta.get(key, "0")
        try:
            return int(raw)
        except ValueError:
            raise TruncatedFile(f"metadata {key}={raw!r} is not an integer") from None

    cal_start = need(_CALIBRATION.size, "calibration")
    cal_fields = _CALIBRATION.unpack_from(view, cal_start)
    try:
        method = CalibrationMethod(cal_fields[7])
    except ValueError:
        raise TruncatedFile(f"unknown calibration method {cal_fields[7]}") from None
    calibration = CalibrationState(
        Pose.from_wire(cal_fields[:7]),
        method,
        meta_int("calibration_established_at"),
    )

    ext_count = data[need(1, "extrinsic count")]
    extrinsics = []
    for _ in range(ext_count):
        e_start = need(_EXTRINSIC.size, "extrinsic record")
        fields = _EXTRINSIC.unpack_from(view, e_start)
        try:
            parent, child = FrameId(fields[0]), FrameId(fields[1])
        except ValueError:
            raise TruncatedFile(f"unknown frame id in extrinsic: {fields[:2]}") from None
        extrinsics.append(Extrinsic(parent, child, Pose.from_wire(fields[2:9])))

    rc_start = need(_RATE_COUNT.size, "rate and frame count")
    rate, frame_count = _RATE_COUNT.unpack_from(view, rc_start)

    raw_frames = []
    for _ in range(frame_count):
        f_start = need(_FRAME.size, "frame record")
        raw_frames.append(_FRAME.unpack_from(view, f_start))

    ev_start = need(4, "event count")
    (event_count,) = struct.unpack_from("<I", view, ev_start)
    events = []
    for _ in range(event_count):
        e_start = need(_EVENT.size, "event record")
        frame_idx, code = _EVENT.unpack_from(view, e_start)
        events.append((frame_idx, code))

    if pos != len(data) - _CRC.size:
        raise TruncatedFile(
            f"{len(data) - _CRC.size - pos} bytes of trailing data before the checksum"
        )

    per_frame_events: list[list[int]] = [[] for _ in range(frame_count)]
    for frame_idx, code in events:
        if 0 <= frame_idx < frame_count:
            per_frame_events[frame_idx].append(code)

    frames = []
    for k, fields in enumerate(raw_frames):
        frames.append(
            SyncedFrame(
                index=k,
                timeline_time=fields[0],
                validity=fields[1],
                left_tip=Pose.from_wire(fields[2:9]),
                right_tip=Pose.from_wire(fields[9:16]),
                head=Pose.from_wire(fields[16:23]),
                left_width=fields[23],
                right_width=fields[24],
                events=tuple(per_frame_events[k]),
            )
        )

    try:
        source_kind = SourceKind(meta.get("source_kind", ""))
    except ValueError:
        raise TruncatedFile(f"unknown source kind {meta.get('source_kind')!r}") from None
    known = set(_STANDARD_KEYS)
    header = EpisodeHeader(
        task_name=meta.get("task_name", ""),
        operator_id=meta.get("operator_id", ""),
        source_kind=source_kind,
        rate=rate,
        calibration=calibration,
        extrinsics=tuple(extrinsics),
        created_at=meta_int("created_at"),
        format_version=version,
        extra=tuple(sorted((k, v) for k, v in meta.items() if k not in known)),
    )
    return Episode(header, tuple(frames), tuple(events))


def read_episode_file(path) -> Episode:
    with open(path, "rb") as fh:
        return read_episode(fh.read())


# --- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    category: str  # grid | quaternion | translation | width | gap | event
    frame: int | None
    channel: str | None
    message: str

    def __str__(self) -> str:
        return self.message


_CHANNELS = (
    ("left_tip", VALID_LEFT),
    ("right_tip", VALID_RIGHT),
    ("head", VALID_HEAD),
)


def validate_episode(
    ep: Episode,
    *,
    max_width: float = DEFAULT_MAX_WIDTH_M,
    gap_limit: int = DEFAULT_GAP_LIMIT,
) -> list[Diagnostic]:
    """Quality gate: empty result iff the episode is internally consistent.

    Checks timeline grid exactness, quaternion norms (1e-6), finite
    translations, width range, per-channel invalid-run lengths against
    gap_limit, and event frame references.
    """
    out: list[Diagnostic] = []
    rate = ep.header.rate
    for k, frame in enumerate(ep.frames):
        expected = frame_time(k, rate)
        if frame.timeline_time != expected:
            out.append(
                Diagnostic(
                    "grid", k, None,
                    f"frame {k}: timeline time {frame.timeline_time} us, "
                    f"grid expects {expected} us",
                )
            )
        for channel, _ in _CHANNELS:
            pose: Pose = getattr(frame, channel)
            n = pose.rotation.norm()
            if abs(n - 1.0) > 1e-6:
                out.append(
                    Diagnostic(
                        "quaternion", k, channel,
                        f"frame {k} {channel}: quaternion norm {n:.9g} is off unit",
                    )
                )
            if not all(math.isfinite(c) for c in pose.translation):
                out.append(
                    Diagnostic(
                        "translation", k, channel,
                        f"frame {k} {channel}: non-finite translation",
                    )
                )
        for side, width in (("left", frame.left_width), ("right", frame.right_width)):
            if not (math.isfinite(width) and 0.0 <= width <= max_width):
                out.append(
                    Diagnostic(
                        "width", k, f"{side}_width",
                        f"frame {k} {side}_width: {width} outside [0, {max_width}]",
                    )
                )

    for channel, bit in _CHANNELS:
        run_start = None
        for k, frame in enumerate(ep.frames):
            if not frame.validity & bit:
                if run_start is None:
                    run_start = k
            else:
                if run_start is not None and k - run_start > gap_limit:
                    out.append(_gap_diag(channel, run_start, k - run_start, gap_limit))
                run_start = None
        if run_start is not None and len(ep.frames) - run_start > gap_limit:
            out.append(_gap_diag(channel, run_start, len(ep.frames) - run_start, gap_limit))

    for j, (frame_idx, code) in enumerate(ep.events):
        if not 0 <= frame_idx < len(ep.frames):
            out.append(
                Diagnostic(
                    "event", None, None,
                    f"event {j} (code {code}): frame {frame_idx} out of range",
                )
            )
    return out


def _gap_diag(channel: str, start: int, length: int, limit: int) -> Diagnostic:
    return Diagnostic(
        "gap", start, channel,
        f"{channel}: {length} consecutive invalid frames from frame {start} "
        f"exceed the gap limit of {limit}",
    )


# --- mix manifest ---------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    source_kind: SourceKind
    path: str
    frame_count: int
    checksum: int  # the episode file's trailing crc32 (crc of the body)


@dataclass(frozen=True)
class EpisodeManifest:
    entries: tuple[ManifestEntry, ...]
    mix_ratio_requested: float
    seed: int
    notes: tuple[str, ...] = ()

    def count(self, kind: SourceKind) -> int:
        return sum(1 for e in self.entries if e.source_kind == kind)


def mixed_teleop_count(ratio: float, activeumi_count: int) -> int:
    """Entries to draw from the teleop pool; ties round half-even."""
    return int(round(ratio * activeumi_count))


def build_mix_manifest(
    activeumi_set: Sequence[ManifestEntry],
    teleop_set: Sequence[ManifestEntry],
    ratio: float,
    seed: int,
) -> EpisodeManifest:
    """All primary-device episodes plus round(ratio * N) seeded teleop draws.

    Draws are without replacement; a pool smaller than the request falls
    back to replacement and says so in the notes.  Output order (and
    therefore the serialized manifest) is a pure function of inputs + seed.
    """
    if not 0.0 <= ratio < 1.0:
        raise ValueError(f"mix ratio must be in [0, 1), got {ratio}")
    want = mixed_teleop_count(ratio, len(activeumi_set))
    if ratio > 0.0 and not teleop_set:
        raise EmptyTeleopPool("requested a teleop fraction but the pool is empty")

    notes: list[str] = []
    rng = Pcg32(seed, STREAM_MANIFEST_MIX)
    chosen: list[ManifestEntry] = []
    if want > 0:
        if want <= len(teleop_set):
            pool = list(teleop_set)
            for _ in range(want):
                k = rng.randrange(len(pool))
                chosen.append(pool.pop(k))
        else:
            notes.append(
                f"teleop pool of {len(teleop_set)} is smaller than the requested "
                f"{want}; sampled with replacement"
            )
            for _ in range(want):
                chosen.append(teleop_set[rng.randrange(len(teleop_set))])

    return EpisodeManifest(
        entries=tuple(activeumi_set) + tuple(chosen),
        mix_ratio_requested=ratio,
        seed=seed,
        notes=tuple(notes),
    )


def format_manifest(manifest: EpisodeManifest) -> str:
    lines = [
        "# aumi mix manifest",
        f"# ratio_requested = {manifest.mix_ratio_requested!r}",
        f"# seed = {manifest.seed}",
        f"# activeumi_count = {manifest.count(SourceKind.ACTIVEUMI)}",
        f"# teleop_count = {manifest.count(SourceKind.TELEOP)}",
    ]
    lines.extend(f"# note: {n}" for n in manifest.notes)
    for e in manifest.entries:
        for piece in (e.path,):
            if "\t" in piece or "\n" in piece:
                raise ValueError(f"path not representable in manifest: {piece!r}")
        lines.append(f"{e.source_kind.value}\t{e.path}\t{e.frame_count}\t{e.checksum:08x}")
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> EpisodeManifest:
    ratio = 0.0
    seed = 0
    notes: list[str] = []
    entries: list[ManifestEntry] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("ratio_requested"):
                ratio = float(body.split("=", 1)[1])
            elif body.startswith("seed"):
                seed = int(body.split("=", 1)[1])
            elif body.startswith("note:"):
                notes.append(body[len("note:"):].strip())
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"manifest line {lineno}: expected 4 tab-separated fields")
        kind, path, count, crc = parts
        entries.append(ManifestEntry(SourceKind(kind), path, int(count), int(crc, 16)))
    return EpisodeManifest(tuple(entries), ratio, seed, tuple(notes))
