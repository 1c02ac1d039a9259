"""Time-aligned data model: channels, episodes, sessions, decision points.

All times are seconds relative to the session start. Feature windows are
half-open ``[t0, t1)``; label windows are open-closed ``(t, t+tau_f]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError

#: Canonical channel names in layout order (physiological, then physical).
CHANNEL_NAMES = ("BVP", "IBI", "EDA", "ACC_X", "ACC_Y", "ACC_Z")

#: Nominal sampling rates of the uniformly sampled channels (Hz).
UNIFORM_RATES = {"BVP": 64.0, "EDA": 4.0, "ACC_X": 32.0, "ACC_Y": 32.0, "ACC_Z": 32.0}

#: Decision points and feature bins live on this grid (seconds).
STRIDE = 15.0

PHYSIOLOGICAL_CHANNELS = ("BVP", "IBI", "EDA")
PHYSICAL_CHANNELS = ("ACC_X", "ACC_Y", "ACC_Z")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim != 1:
        raise DataError(f"expected 1-D array, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SignalChannel:
    """One sensor stream, either uniformly sampled or event-based.

    Uniform channels imply timestamps ``start_offset + i / sample_rate``.
    Event-based channels carry one value per event at ``event_times``.
    """

    name: str
    kind: str  # "uniform" | "event"
    start_offset: float
    samples: np.ndarray
    sample_rate: float | None = None
    event_times: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "event"):
            raise DataError(f"unknown channel kind {self.kind!r}")
        if not np.all(np.isfinite(self.samples)):
            raise DataError(f"channel {self.name}: non-finite sample values")
        if self.kind == "uniform":
            if self.sample_rate is None or self.sample_rate <= 0:
                raise DataError(f"channel {self.name}: uniform channels need sample_rate > 0")
            if self.event_times is not None:
                raise DataError(f"channel {self.name}: uniform channels carry no event_times")
        else:
            if self.event_times is None or len(self.event_times) != len(self.samples):
                raise DataError(f"channel {self.name}: event_times must pair with samples")
            if not np.all(np.isfinite(self.event_times)):
                raise DataError(f"channel {self.name}: non-finite event times")
            if len(self.event_times) > 1 and not np.all(np.diff(self.event_times) > 0):
                raise DataError(f"channel {self.name}: event_times must be strictly increasing")

    @staticmethod
    def uniform(name: str, sample_rate: float, samples, start_offset: float = 0.0) -> "SignalChannel":
        return SignalChannel(
            name=name,
            kind="uniform",
            start_offset=float(start_offset),
            samples=_frozen_array(samples),
            sample_rate=float(sample_rate),
        )

    @staticmethod
    def events(name: str, event_times, values, start_offset: float = 0.0) -> "SignalChannel":
        return SignalChannel(
            name=name,
            kind="event",
            start_offset=float(start_offset),
            samples=_frozen_array(values),
            event_times=_frozen_array(event_times),
        )

    @property
    def extent(self) -> float:
        """Time of the end of this channel's data, from session start."""
        if self.kind == "uniform":
            return self.start_offset + len(self.samples) / self.sample_rate
        if len(self.event_times) == 0:
            return self.start_offset
        return self.start_offset + float(self.event_times[-1])

    def last_value_before(self, t: float) -> float | None:
        """Most recent sample value strictly before time ``t``, if any."""
        if self.kind == "uniform":
            # index i has timestamp start_offset + i/rate; want the largest i with ts < t
            i = math.ceil(self.sample_rate * (t - self.start_offset) - 1e-9) - 1
            i = min(i, len(self.samples) - 1)
            return float(self.samples[i]) if i >= 0 else None
        times = self.event_times + self.start_offset
        i = int(np.searchsorted(times, t, side="left")) - 1
        return float(self.samples[i]) if i >= 0 else None

    def first_value(self) -> float | None:
        return float(self.samples[0]) if len(self.samples) else None


@dataclass(frozen=True, order=True)
class AggressionEpisode:
    """One coded aggressive episode, ``0 <= start < end``."""

    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise DataError("episode bounds must be finite")
        if self.start < 0 or self.start >= self.end:
            raise DataError(f"invalid episode interval ({self.start}, {self.end})")


def merge_episodes(episodes: Iterable[AggressionEpisode]) -> tuple[AggressionEpisode, ...]:
    """Sort episodes and merge overlapping or touching intervals."""
    eps = sorted(episodes)
    merged: list[AggressionEpisode] = []
    for ep in eps:
        if merged and ep.start <= merged[-1].end:
            last = merged[-1]
            if ep.end > last.end:
                merged[-1] = AggressionEpisode(last.start, ep.end)
        else:
            merged.append(ep)
    return tuple(merged)


@dataclass(frozen=True)
class Session:
    """One participant's observational recording: six channels plus episodes."""

    participant_id: str
    session_id: str
    duration: float
    channels: dict[str, SignalChannel] = field(repr=False)
    episodes: tuple[AggressionEpisode, ...] = ()

    def __post_init__(self):
        if self.duration <= 0:
            raise DataError("session duration must be positive")
        missing = set(CHANNEL_NAMES) - set(self.channels)
        extra = set(self.channels) - set(CHANNEL_NAMES)
        if missing or extra:
            raise DataError(f"session needs exactly channels {CHANNEL_NAMES}; "
                            f"missing={sorted(missing)} extra={sorted(extra)}")
        for ch in self.channels.values():
            if ch.start_offset < 0 or ch.extent > self.duration + 1e-9:
                raise DataError(f"channel {ch.name} data outside [0, {self.duration}]")
        object.__setattr__(self, "episodes", merge_episodes(self.episodes))
        for ep in self.episodes:
            if ep.end > self.duration + 1e-9:
                raise DataError(f"episode {ep} exceeds session duration {self.duration}")

    def channel(self, name: str) -> SignalChannel:
        return self.channels[name]


@dataclass(frozen=True)
class DecisionPoint:
    """A prediction instant on the 15 s grid, valid for the configured windows."""

    session: Session
    t: float


def channel_slice(channel: SignalChannel, t0: float, t1: float) -> np.ndarray:
    """Values of ``channel`` with timestamps in the half-open window ``[t0, t1)``.

    Uniform channels slice by index arithmetic, event channels by filtering
    event times. An empty result is allowed.
    """
    if t0 >= t1:
        raise ValueError(f"invalid slice range [{t0}, {t1})")
    if channel.kind == "uniform":
        r = channel.sample_rate
        # nudge by 1e-9 so that timestamps within float noise of the boundary
        # resolve as if computed exactly
        lo = math.ceil(r * (t0 - channel.start_offset) - 1e-9)
        hi = math.ceil(r * (t1 - channel.start_offset) - 1e-9)
        lo = max(lo, 0)
        hi = min(hi, len(channel.samples))
        if hi <= lo:
            return channel.samples[:0]
        return channel.samples[lo:hi]
    times = channel.event_times + channel.start_offset
    lo = int(np.searchsorted(times, t0, side="left"))
    hi = int(np.searchsorted(times, t1, side="left"))
    return channel.samples[lo:hi]


def episode_overlaps(episodes: Sequence[AggressionEpisode], t0: float, t1: float) -> bool:
    """True iff any episode overlaps the open-closed query window ``(t0, t1]``.

    An episode touching only the open boundary (``end == t0``) does not count.
    """
    if t0 >= t1:
        raise ValueError(f"invalid query range ({t0}, {t1}]")
    return any(ep.start < t1 and ep.end > t0 for ep in episodes)


def _validate_grid_multiple(value: float, name: str) -> None:
    if value <= 0 or (value % STRIDE) != 0:
        raise ConfigError(f"{name} must be a positive multiple of {STRIDE:g} s, got {value}")


def decision_points(session: Session, tau_p: float, tau_f: float) -> list[DecisionPoint]:
    """All prediction instants ``t = tau_p + 15*j`` with ``t + tau_f <= duration``."""
    _validate_grid_multiple(tau_p, "tau_p")
    _validate_grid_multiple(tau_f, "tau_f")
    n = math.floor((session.duration - tau_p - tau_f) / STRIDE) + 1
    # fix up float rounding at the boundary so the result matches enumeration
    while n > 0 and tau_p + STRIDE * (n - 1) + tau_f > session.duration:
        n -= 1
    while tau_p + STRIDE * n + tau_f <= session.duration:
        n += 1
    return [DecisionPoint(session, tau_p + STRIDE * j) for j in range(max(n, 0))]
