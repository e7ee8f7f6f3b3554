"""Device wire protocol, clock alignment, and fixed-rate resampling.

Wire framing (all integers little-endian):

    +------+------+------+----------------+-------------------+
    | 0xA5 | 0x55 | type | payload length |      payload      |
    +------+------+------+----------------+-------------------+
      1B     1B     u8         u32            length bytes

Payloads by type:

    0x01 HELLO       u16 proto_version, u8 source,
                     u32 descriptor length, UTF-8 descriptor
    0x02 SAMPLE      u8 source, u32 seq, u64 device_time,
                     7 x f64 pose (tx ty tz qw qx qy qz),
                     f64 gripper_width (NaN when absent),
                     u16 buttons (bit0 trigger, bit1 B),
                     u8 flags (bit0 tracking lost)
    0x03 EVENT       u8 code, u64 device_time
    0x04 CLOCK_PING  u32 probe_id, u64 timestamp
    0x05 CLOCK_PONG  u32 probe_id, u64 timestamp
    0x06 BYE         (empty; whole message is exactly 7 bytes)

decode_message is total: any byte string yields either a message or one of
the typed errors below, never an unhandled exception.

Resampling maps per-source sample streams onto the shared timeline
tick k -> round(k * 1e6 / rate) microseconds.  Between bracketing samples
translation is interpolated linearly and rotation by slerp.  A source whose
latest sample is older than HOLD_LIMIT_PERIODS periods goes invalid and
holds its last pose; ticks outside a source's span never extrapolate.
"""

from __future__ import annotations

import enum
import math
import statistics
import struct
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence, Union

from aumi.calibration import CalibrationState, apply_calibration
from aumi.geometry import Extrinsic, FrameId, Pose, slerp, to_tip

MAGIC = b"\xa5\x55"
PROTO_VERSION = 1
HOLD_LIMIT_PERIODS = 5

_HEADER = struct.Struct("<2sBI")
_SAMPLE_BODY = struct.Struct("<BIQ7ddHB")
_EVENT_BODY = struct.Struct("<BQ")
_CLOCK_BODY = struct.Struct("<IQ")
_HELLO_PREFIX = struct.Struct("<HBI")


class ProtocolError(ValueError):
    """Base for every wire decode failure."""


class BadMagic(ProtocolError):
    pass


class UnknownType(ProtocolError):
    pass


class LengthMismatch(ProtocolError):
    pass


class TruncatedPayload(ProtocolError):
    pass


class BadPayload(ProtocolError):
    """Framing was fine but the payload content does not parse."""


class InsufficientExchanges(ValueError):
    """Clock alignment needs at least three ping/pong round trips."""


class EmptyStream(ValueError):
    pass


class NonMonotonicTime(ValueError):
    pass


class MsgType(enum.IntEnum):
    HELLO = 0x01
    SAMPLE = 0x02
    EVENT = 0x03
    CLOCK_PING = 0x04
    CLOCK_PONG = 0x05
    BYE = 0x06


class StreamSource(enum.IntEnum):
    LEFT_CONTROLLER = 0
    RIGHT_CONTROLLER = 1
    HMD = 2


class EventCode(enum.IntEnum):
    ZERO_POINT_RESET = 1
    EPISODE_START = 2
    EPISODE_STOP = 3
    DOCK_CONFIRM = 4


BUTTON_TRIGGER = 0x0001
BUTTON_B = 0x0002
FLAG_TRACKING_LOST = 0x01


@dataclass(frozen=True)
class Hello:
    proto_version: int
    source: StreamSource
    descriptor: str


@dataclass(frozen=True)
class StreamSample:
    """One tracker report.  gripper_width is None for sources without one."""

    source: StreamSource
    seq: int
    device_time: int
    pose: Pose
    gripper_width: float | None
    buttons: int = 0
    flags: int = 0


@dataclass(frozen=True)
class Event:
    code: int
    device_time: int


@dataclass(frozen=True)
class ClockPing:
    probe_id: int
    timestamp: int


@dataclass(frozen=True)
class ClockPong:
    probe_id: int
    timestamp: int


@dataclass(frozen=True)
class Bye:
    pass


ProtocolMessage = Union[Hello, StreamSample, Event, ClockPing, ClockPong, Bye]

_FIXED_PAYLOAD_SIZES = {
    MsgType.SAMPLE: _SAMPLE_BODY.size,
    MsgType.EVENT: _EVENT_BODY.size,
    MsgType.CLOCK_PING: _CLOCK_BODY.size,
    MsgType.CLOCK_PONG: _CLOCK_BODY.size,
    MsgType.BYE: 0,
}


def encode_message(msg: ProtocolMessage) -> bytes:
    if isinstance(msg, Hello):
        desc = msg.descriptor.encode("utf-8")
        payload = _HELLO_PREFIX.pack(msg.proto_version, msg.source, len(desc)) + desc
        mtype = MsgType.HELLO
    elif isinstance(msg, StreamSample):
        width = math.nan if msg.gripper_width is None else float(msg.gripper_width)
        payload = _SAMPLE_BODY.pack(
            msg.source,
            msg.seq,
            msg.device_time,
            *msg.pose.to_wire(),
            width,
            msg.buttons,
            msg.flags,
        )
        mtype = MsgType.SAMPLE
    elif isinstance(msg, Event):
        payload = _EVENT_BODY.pack(msg.code, msg.device_time)
        mtype = MsgType.EVENT
    elif isinstance(msg, ClockPing):
        payload = _CLOCK_BODY.pack(msg.probe_id, msg.timestamp)
        mtype = MsgType.CLOCK_PING
    elif isinstance(msg, ClockPong):
        payload = _CLOCK_BODY.pack(msg.probe_id, msg.timestamp)
        mtype = MsgType.CLOCK_PONG
    elif isinstance(msg, Bye):
        payload = b""
        mtype = MsgType.BYE
    else:
        raise TypeError(f"not a protocol message: {msg!r}")
    return _HEADER.pack(MAGIC, mtype, len(payload)) + payload


def _check_magic(data: bytes) -> None:
    prefix = data[: len(MAGIC)]
    if prefix != MAGIC[: len(prefix)]:
        raise BadMagic(f"expected magic a5 55, got {prefix.hex(' ')}")


def decode_message(data: bytes) -> ProtocolMessage:
    """Decode exactly one message occupying the whole buffer.

    Raises BadMagic / UnknownType / LengthMismatch / TruncatedPayload /
    BadPayload; never anything else, whatever the input bytes.
    """
    _check_magic(data)
    if len(data) < _HEADER.size:
        raise TruncatedPayload(f"{len(data)} bytes is shorter than the 7-byte header")
    _, raw_type, length = _HEADER.unpack_from(data)
    try:
        mtype = MsgType(raw_type)
    except ValueError:
        raise UnknownType(f"message type 0x{raw_type:02x}") from None
    if _HEADER.size + length > len(data):
        raise TruncatedPayload(
            f"declared payload of {length} bytes exceeds the {len(data) - _HEADER.size} present"
        )
    if _HEADER.size + length < len(data):
        raise LengthMismatch(
            f"{len(data) - _HEADER.size - length} trailing bytes after the declared payload"
        )
    payload = data[_HEADER.size :]

    expected = _FIXED_PAYLOAD_SIZES.get(mtype)
    if expected is not None and length != expected:
        raise LengthMismatch(
            f"{mtype.name} payload must be {expected} bytes, declared {length}"
        )

    if mtype == MsgType.HELLO:
        if length < _HELLO_PREFIX.size:
            raise LengthMismatch(
                f"HELLO payload must be at least {_HELLO_PREFIX.size} bytes, declared {length}"
            )
        version, raw_source, desc_len = _HELLO_PREFIX.unpack_from(payload)
        if _HELLO_PREFIX.size + desc_len != length:
            raise LengthMismatch(
                f"HELLO descriptor length {desc_len} inconsistent with payload of {length}"
            )
        try:
            descriptor = payload[_HELLO_PREFIX.size :].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BadPayload(f"HELLO descriptor is not UTF-8: {exc}") from None
        return Hello(version, _decode_source(raw_source), descriptor)
    if mtype == MsgType.SAMPLE:
        fields = _SAMPLE_BODY.unpack(payload)
        raw_source, seq, device_time = fields[0], fields[1], fields[2]
        pose = Pose.from_wire(fields[3:10])
        width = fields[10]
        return StreamSample(
            _decode_source(raw_source),
            seq,
            device_time,
            pose,
            None if math.isnan(width) else width,
            fields[11],
            fields[12],
        )
    if mtype == MsgType.EVENT:
        code, device_time = _EVENT_BODY.unpack(payload)
        return Event(code, device_time)
    if mtype == MsgType.CLOCK_PING:
        probe, ts = _CLOCK_BODY.unpack(payload)
        return ClockPing(probe, ts)
    if mtype == MsgType.CLOCK_PONG:
        probe, ts = _CLOCK_BODY.unpack(payload)
        return ClockPong(probe, ts)
    return Bye()


def _decode_source(raw: int) -> StreamSource:
    try:
        return StreamSource(raw)
    except ValueError:
        raise BadPayload(f"unknown stream source {raw}") from None


class StreamDecoder:
    """Incremental framer for an ordered byte stream (socket or file).

    feed() returns every complete message in arrival order and buffers the
    tail.  Errors carry the same types as decode_message; the stream is not
    resynchronized after one.
    """

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> list[ProtocolMessage]:
        self._buf.extend(chunk)
        out: list[ProtocolMessage] = []
        while True:
            if len(self._buf) < _HEADER.size:
                _check_magic(bytes(self._buf))
                break
            _check_magic(bytes(self._buf[:2]))
            _, raw_type, length = _HEADER.unpack_from(self._buf)
            end = _HEADER.size + length
            if len(self._buf) < end:
                break
            out.append(decode_message(bytes(self._buf[:end])))
            del self._buf[:end]
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)


# --- clock alignment --------------------------------------------------------


@dataclass(frozen=True)
class ClockModel:
    """device_time + offset = pipeline time (microseconds, may be half-integral)."""

    offset: float
    confidence: int

    def to_pipeline(self, device_time: int) -> int:
        return round(device_time + self.offset)


def align_clock(exchanges: Sequence[tuple[int, int, int]]) -> ClockModel:
    """Estimate the device clock offset from (send, device, recv) triples.

    Each exchange votes (send + recv) / 2 - device; the median vote wins so
    a minority of delayed round trips cannot skew the result.
    """
    if len(exchanges) < 3:
        raise InsufficientExchanges(
            f"need at least 3 clock exchanges, got {len(exchanges)}"
        )
    votes = []
    for send_t, device_t, recv_t in exchanges:
        if recv_t < send_t:
            raise ValueError(f"exchange received before it was sent: {send_t} > {recv_t}")
        votes.append((send_t + recv_t) / 2 - device_t)
    return ClockModel(statistics.median(votes), len(exchanges))


def apply_clock(samples: Iterable[StreamSample], model: ClockModel) -> list[StreamSample]:
    """Shift sample device times onto the pipeline clock."""
    return [replace(s, device_time=model.to_pipeline(s.device_time)) for s in samples]


# --- resampling --------------------------------------------------------------


VALID_LEFT = 0x01
VALID_RIGHT = 0x02
VALID_HEAD = 0x04
VALID_ALL = VALID_LEFT | VALID_RIGHT | VALID_HEAD


@dataclass(frozen=True)
class SyncedFrame:
    """All sources on one timeline tick, calibrated and mapped to tips."""

    index: int
    timeline_time: int  # microseconds
    left_tip: Pose
    right_tip: Pose
    head: Pose
    left_width: float
    right_width: float
    validity: int
    events: tuple[int, ...] = ()


def frame_time(index: int, rate: float) -> int:
    """Timeline tick in microseconds: round(index * 1e6 / rate), no drift."""
    return round(index * 1_000_000 / rate)


def hold_limit_us(rate: float, periods: int = HOLD_LIMIT_PERIODS) -> int:
    """Staleness bound: a source older than this at a tick goes invalid."""
    return math.ceil(periods * 1_000_000 / rate)


class _SourceCursor:
    """Walks one source's samples along ascending tick times."""

    def __init__(self, source: StreamSource, samples: Sequence[StreamSample]) -> None:
        if not samples:
            raise EmptyStream(f"source {source.name} has no samples")
        last = None
        for s in samples:
            if last is not None and s.device_time < last:
                raise NonMonotonicTime(
                    f"source {source.name}: device_time {s.device_time} after {last}"
                )
            last = s.device_time
        self.samples = samples
        self.i = 0  # greatest index with device_time <= current tick, or -1 region

    def at(self, t: int, limit_us: int) -> tuple[Pose, float | None, bool]:
        """(raw pose, width, fresh) for tick t.

        Outside the sample span or staler than limit_us the nearest
        held sample is returned with fresh=False; no extrapolation.
        """
        samples = self.samples
        while self.i + 1 < len(samples) and samples[self.i + 1].device_time <= t:
            self.i += 1
        prev = samples[self.i] if samples[self.i].device_time <= t else None
        nxt = samples[self.i + 1] if self.i + 1 < len(samples) else None
        if prev is None:
            # Tick precedes the whole span: hold the first sample, invalid.
            first = samples[0]
            return (first.pose, first.gripper_width, False)
        if nxt is None:
            if prev.device_time == t:
                return (prev.pose, prev.gripper_width, True)
            return (prev.pose, prev.gripper_width, False)
        if t - prev.device_time > limit_us:
            return (prev.pose, prev.gripper_width, False)
        if nxt.device_time == prev.device_time:
            return (prev.pose, prev.gripper_width, True)
        u = (t - prev.device_time) / (nxt.device_time - prev.device_time)
        if u == 0.0:
            return (prev.pose, prev.gripper_width, True)
        pa, pb = prev.pose.translation, nxt.pose.translation
        trans = (
            pa[0] + u * (pb[0] - pa[0]),
            pa[1] + u * (pb[1] - pa[1]),
            pa[2] + u * (pb[2] - pa[2]),
        )
        rot = slerp(prev.pose.rotation, nxt.pose.rotation, u)
        if prev.gripper_width is None or nxt.gripper_width is None:
            width = prev.gripper_width
        else:
            width = prev.gripper_width + u * (nxt.gripper_width - prev.gripper_width)
        return (Pose(trans, rot), width, True)


def _tip_extrinsic(extrinsics: Sequence[Extrinsic], parent: FrameId) -> Extrinsic:
    for ext in extrinsics:
        if ext.parent == parent:
            return ext
    raise ValueError(f"no extrinsic declared for {parent.name}")


def resample(
    streams: Mapping[StreamSource, Sequence[StreamSample]],
    calib: CalibrationState,
    extrinsics: Sequence[Extrinsic],
    rate: float = 30.0,
    *,
    hold_limit_periods: int = HOLD_LIMIT_PERIODS,
    events: Sequence[tuple[int, int]] = (),
) -> list[SyncedFrame]:
    """Merge per-source streams onto the shared tick grid.

    Sample times must already be on the pipeline clock (see apply_clock).
    The grid runs from tick 0 through the last tick at or before the newest
    sample of any source.  Events are (pipeline_time, code) pairs; each
    lands exactly once, on the frame whose [tick_k, tick_k+1) interval
    contains its time (clamped to the first/last frame at the edges).
    Pure function: identical inputs give identical output, byte for byte.
    """
    if rate <= 0 or not math.isfinite(rate):
        raise ValueError(f"rate must be positive and finite, got {rate}")
    cursors = {
        source: _SourceCursor(source, streams.get(source, ()))
        for source in (StreamSource.LEFT_CONTROLLER, StreamSource.RIGHT_CONTROLLER, StreamSource.HMD)
    }
    limit = hold_limit_us(rate, hold_limit_periods)
    left_ext = _tip_extrinsic(extrinsics, FrameId.LEFT_CONTROLLER)
    right_ext = _tip_extrinsic(extrinsics, FrameId.RIGHT_CONTROLLER)

    t_end = max(c.samples[-1].device_time for c in cursors.values())
    n_frames = 1
    while frame_time(n_frames, rate) <= t_end:
        n_frames += 1

    ticks = [frame_time(k, rate) for k in range(n_frames)]
    frame_events: list[list[int]] = [[] for _ in range(n_frames)]
    for when, code in events:
        k = _containing_frame(ticks, when, rate)
        frame_events[k].append(code)

    frames: list[SyncedFrame] = []
    for k, t in enumerate(ticks):
        validity = 0

        raw, width_l, fresh = cursors[StreamSource.LEFT_CONTROLLER].at(t, limit)
        if fresh:
            validity |= VALID_LEFT
        left = to_tip(apply_calibration(raw, calib), left_ext)

        raw, width_r, fresh = cursors[StreamSource.RIGHT_CONTROLLER].at(t, limit)
        if fresh:
            validity |= VALID_RIGHT
        right = to_tip(apply_calibration(raw, calib), right_ext)

        raw, _, fresh = cursors[StreamSource.HMD].at(t, limit)
        if fresh:
            validity |= VALID_HEAD
        head = apply_calibration(raw, calib)

        frames.append(
            SyncedFrame(
                index=k,
                timeline_time=t,
                left_tip=left,
                right_tip=right,
                head=head,
                left_width=width_l if width_l is not None else 0.0,
                right_width=width_r if width_r is not None else 0.0,
                validity=validity,
                events=tuple(frame_events[k]),
            )
        )
    return frames


def _containing_frame(ticks: Sequence[int], when: int, rate: float) -> int:
    """Index k with ticks[k] <= when < ticks[k+1], clamped to the grid."""
    if when <= ticks[0]:
        return 0
    if when >= ticks[-1]:
        return len(ticks) - 1
    lo, hi = 0, len(ticks) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ticks[mid] <= when:
            lo = mid
        else:
            hi = mid
    return lo
