"""Replay fidelity metrics: tape-measure error and wall-clock slowdown.

The tape-measure protocol scores how faithfully a recorded pinch at a
known separation survives replay.  Each trial episode carries its ground
truth in the ``nominal_m`` metadata key; the tip commands are extracted,
pushed through a replayer (a stand-in for robot execution), and the
replayed separation over the final stable window is compared with the
nominal:

    rpe_pct  = |replayed_m - nominal_m| / nominal_m * 100
    mean_pct = sum of rpe_pct over trials / trial count

Slowdown is simpler bookkeeping: replay wall-clock duration over the
demonstration's, per labeled condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from aumi.geometry import Pose
from aumi.recording import Episode, validate_episode
from aumi.rng import Pcg32, STREAM_REPLAY_NOISE
from aumi.streaming import SyncedFrame, VALID_LEFT, VALID_RIGHT

__all__ = [
    "DEFAULT_NOMINALS",
    "STABLE_WINDOW_FRAMES",
    "STABLE_SPREAD_M",
    "CommandStep",
    "FixedBiasReplayer",
    "InvalidChannel",
    "MissingBaseline",
    "MissingNominal",
    "NoisyReplayer",
    "RpeReport",
    "RpeTrial",
    "SlowdownEntry",
    "SlowdownReport",
    "UnstableEnd",
    "ValidationFailed",
    "compute_rpe",
    "episode_nominal",
    "extract_command_stream",
    "format_rpe_report",
    "format_slowdown",
    "gripper_separation",
    "identity_replayer",
    "relative_positional_error",
    "slowdown_report",
    "tape_measure_protocol",
]

# Marked separations for a full protocol run, one meter down to ten
# centimeters in even steps.
DEFAULT_NOMINALS = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1)

STABLE_WINDOW_FRAMES = 15
STABLE_SPREAD_M = 0.002


class InvalidChannel(ValueError):
    """A frame's tip channel is flagged invalid where a valid one is required."""


class MissingNominal(ValueError):
    """The episode metadata carries no usable nominal_m entry."""


class UnstableEnd(ValueError):
    """The demonstration does not hold still over the final window."""


class ValidationFailed(ValueError):
    """Episode failed the replay gate; diagnostics list what blocked it."""

    def __init__(self, diagnostics) -> None:
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = tuple(diagnostics)


class MissingBaseline(ValueError):
    """Slowdown needs a positive demonstration duration to divide by."""


def relative_positional_error(nominal_m: float, replay_m: float) -> float:
    """Percentage error of a replayed separation against its ground truth."""
    if not (nominal_m > 0 and math.isfinite(nominal_m)):
        raise ValueError(f"nominal separation must be positive, got {nominal_m}")
    return abs(replay_m - nominal_m) / nominal_m * 100.0


@dataclass(frozen=True)
class RpeTrial:
    nominal_m: float
    replay_m: float

    @property
    def delta_m(self) -> float:
        return self.replay_m - self.nominal_m

    @property
    def rpe_pct(self) -> float:
        return relative_positional_error(self.nominal_m, self.replay_m)


@dataclass(frozen=True)
class RpeReport:
    trials: tuple[RpeTrial, ...]

    @property
    def mean_rpe_pct(self) -> float:
        if not self.trials:
            raise ValueError("no trials to average")
        return math.fsum(t.rpe_pct for t in self.trials) / len(self.trials)


def compute_rpe(pairs: Iterable[tuple[float, float]]) -> RpeReport:
    """Report from (nominal_m, replay_m) pairs, in order."""
    return RpeReport(tuple(RpeTrial(n, r) for n, r in pairs))


def format_rpe_report(report: RpeReport) -> str:
    lines = ["nominal_m\treplay_m\tdelta_m\trpe_pct"]
    for t in report.trials:
        lines.append(f"{t.nominal_m!r}\t{t.replay_m!r}\t{t.delta_m!r}\t{t.rpe_pct!r}")
    lines.append(f"mean\t{report.mean_rpe_pct!r}")
    return "\n".join(lines) + "\n"


# --- command extraction ---------------------------------------------------------------


@dataclass(frozen=True)
class CommandStep:
    """One tick of the bimanual command stream a replayer executes."""

    time_us: int
    left_tip: Pose
    right_tip: Pose
    left_width: float
    right_width: float


# Diagnostic categories that make an episode unexecutable as commands.
# Width or gap findings degrade quality but still replay.
_BLOCKING = ("grid", "quaternion")


def extract_command_stream(ep: Episode) -> tuple[CommandStep, ...]:
    """Tip commands per frame; refuses episodes whose timeline or rotations
    fail validation."""
    blocking = [d for d in validate_episode(ep) if d.category in _BLOCKING]
    if blocking:
        raise ValidationFailed(blocking)
    return tuple(
        CommandStep(f.timeline_time, f.left_tip, f.right_tip, f.left_width, f.right_width)
        for f in ep.frames
    )


def gripper_separation(frame: SyncedFrame) -> float:
    """Distance between the two tips; both channels must be valid."""
    missing = []
    if not frame.validity & VALID_LEFT:
        missing.append("left_tip")
    if not frame.validity & VALID_RIGHT:
        missing.append("right_tip")
    if missing:
        raise InvalidChannel(
            f"frame {frame.index}: {' and '.join(missing)} invalid"
        )
    return math.dist(frame.left_tip.translation, frame.right_tip.translation)


# --- replayers ---------------------------------------------------------------


Replayer = Callable[[Sequence[CommandStep]], Sequence[CommandStep]]


def identity_replayer(steps: Sequence[CommandStep]) -> Sequence[CommandStep]:
    """Perfect execution; replayed commands are the commands."""
    return steps


@dataclass(frozen=True)
class FixedBiasReplayer:
    """Execution with a constant translation offset on one or both tips."""

    offset: tuple[float, float, float]
    side: str = "right"  # left | right | both

    def __post_init__(self) -> None:
        if self.side not in ("left", "right", "both"):
            raise ValueError(f"side must be left, right, or both, got {self.side!r}")

    def _shift(self, pose: Pose) -> Pose:
        t = pose.translation
        o = self.offset
        return Pose((t[0] + o[0], t[1] + o[1], t[2] + o[2]), pose.rotation)

    def __call__(self, steps: Sequence[CommandStep]) -> list[CommandStep]:
        out = []
        for s in steps:
            left = self._shift(s.left_tip) if self.side in ("left", "both") else s.left_tip
            right = self._shift(s.right_tip) if self.side in ("right", "both") else s.right_tip
            out.append(CommandStep(s.time_us, left, right, s.left_width, s.right_width))
        return out


@dataclass(frozen=True)
class NoisyReplayer:
    """Execution with isotropic gaussian positioning error on both tips.

    Each call reseeds, so replaying the same commands twice gives the
    same result.  Consumption order per step: left xyz, then right xyz.
    """

    sigma_m: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma_m < 0:
            raise ValueError("sigma_m must be nonnegative")

    def __call__(self, steps: Sequence[CommandStep]) -> list[CommandStep]:
        rng = Pcg32(self.seed, STREAM_REPLAY_NOISE)
        out = []
        for s in steps:
            lt = s.left_tip.translation
            left = Pose(
                (lt[0] + rng.gauss(self.sigma_m),
                 lt[1] + rng.gauss(self.sigma_m),
                 lt[2] + rng.gauss(self.sigma_m)),
                s.left_tip.rotation,
            )
            rt = s.right_tip.translation
            right = Pose(
                (rt[0] + rng.gauss(self.sigma_m),
                 rt[1] + rng.gauss(self.sigma_m),
                 rt[2] + rng.gauss(self.sigma_m)),
                s.right_tip.rotation,
            )
            out.append(CommandStep(s.time_us, left, right, s.left_width, s.right_width))
        return out


# --- tape-measure protocol ---------------------------------------------------------------


def episode_nominal(ep: Episode) -> float:
    raw = ep.header.extra_dict().get("nominal_m")
    if raw is None:
        raise MissingNominal("episode metadata has no nominal_m key")
    try:
        value = float(raw)
    except ValueError:
        raise MissingNominal(f"nominal_m={raw!r} is not a number") from None
    if not (value > 0 and math.isfinite(value)):
        raise MissingNominal(f"nominal_m={raw!r} is not a positive separation")
    return value


def _window_mean(values: Sequence[float]) -> float:
    # Centered so a constant window comes back bit-exact.
    base = values[0]
    return base + math.fsum(v - base for v in values) / len(values)


def _step_separation(step: CommandStep) -> float:
    return math.dist(step.left_tip.translation, step.right_tip.translation)


def tape_measure_protocol(
    episodes: Iterable[Episode],
    replayer: Replayer = identity_replayer,
    *,
    window: int = STABLE_WINDOW_FRAMES,
    spread: float = STABLE_SPREAD_M,
) -> RpeReport:
    """Score each pinch episode's replayed separation against its nominal.

    The demonstration must hold still at the end: over the final `window`
    frames every tip channel is valid and the separation spread stays
    within `spread`.  The replayed separation is the mean over the same
    window of the replayer's output.
    """
    trials = []
    for ep in episodes:
        nominal = episode_nominal(ep)
        steps = extract_command_stream(ep)
        if len(ep.frames) < window:
            raise UnstableEnd(
                f"{len(ep.frames)} frames cannot contain the {window}-frame window"
            )
        demo = [gripper_separation(f) for f in ep.frames[-window:]]
        if max(demo) - min(demo) > spread:
            raise UnstableEnd(
                f"separation varies {max(demo) - min(demo):.6f} m over the final "
                f"{window} frames, limit {spread}"
            )
        executed = replayer(steps)
        replay_m = _window_mean([_step_separation(s) for s in executed[-window:]])
        trials.append(RpeTrial(nominal, replay_m))
    return RpeReport(tuple(trials))


# --- slowdown ---------------------------------------------------------------


@dataclass(frozen=True)
class SlowdownEntry:
    label: str
    duration_s: float
    factor: float


@dataclass(frozen=True)
class SlowdownReport:
    baseline_s: float
    entries: tuple[SlowdownEntry, ...]


def slowdown_report(
    baseline_s: float, replays: Sequence[tuple[str, float]]
) -> SlowdownReport:
    """Wall-clock inflation per labeled replay condition."""
    if not (baseline_s > 0 and math.isfinite(baseline_s)):
        raise MissingBaseline(f"baseline duration must be positive, got {baseline_s}")
    entries = []
    for label, duration in replays:
        if not (duration > 0 and math.isfinite(duration)):
            raise ValueError(f"{label}: replay duration must be positive, got {duration}")
        entries.append(SlowdownEntry(label, duration, duration / baseline_s))
    return SlowdownReport(baseline_s, tuple(entries))


def format_slowdown(report: SlowdownReport) -> str:
    lines = [f"baseline_s\t{report.baseline_s!r}", "label\tduration_s\tfactor"]
    for e in report.entries:
        lines.append(f"{e.label}\t{e.duration_s!r}\t{e.factor!r}")
    return "\n".join(lines) + "\n"
