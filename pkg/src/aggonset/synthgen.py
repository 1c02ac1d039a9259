"""Seeded synthetic populations with plantable pre-episode precursors.

Stands in for the private clinical recordings: six channels per session at
the nominal rates, episodes from a homogeneous point process, and a
distributional shift planted in the window leading up to each episode onset.
Waveform realism is a non-goal; the shifts only need to be recoverable by
per-bin statistics.

Determinism: every (participant, session, channel) draws from its own
substream derived from the seed, so generation order cannot change results
and zeroing effect sizes never changes episode placement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from statistics import NormalDist

import numpy as np

from .errors import ConfigError
from .timeline import AggressionEpisode, Session, SignalChannel, merge_episodes

DEFAULT_SEED = 42

_EDA_NOISE_RANGE = (0.10, 0.25)  # per-participant measurement noise sd
_EDA_DRIFT_STEP_SD = 0.001
_BVP_NOISE_FRACTION = 0.08
_BVP_PHASE_JITTER = 0.5  # per-sample fractional phase-increment noise
_IBI_JITTER_RANGE = (0.015, 0.035)  # per-participant beat-interval noise sd
_IBI_FLOOR = 0.25  # shortest plausible beat interval, seconds


@dataclass(frozen=True)
class EffectSizes:
    """Per-channel precursor shifts, scaled by each participant's per-channel
    heterogeneity factors (which may flip the direction for large
    ``heterogeneity_sd``).

    eda: tonic level added at the end of the ramp (signal units).
    bvp: fractional pulse-amplitude increase.
    ibi: fractional beat-interval shortening (raises beat rate).
    acc: fractional movement-noise std increase on each axis.
    """

    eda: float = 0.015
    bvp: float = 0.02
    ibi: float = 0.006
    acc: float = 0.025

    def zeroed(self) -> "EffectSizes":
        return EffectSizes(0.0, 0.0, 0.0, 0.0)

    def as_dict(self) -> dict:
        return {"eda": self.eda, "bvp": self.bvp, "ibi": self.ibi, "acc": self.acc}


@dataclass(frozen=True)
class PopulationConfig:
    n_participants: int = 15
    sessions_per_participant: int = 1
    session_duration: float = 3600.0
    episode_rate: float = 10.0  # episodes per hour
    episode_duration_mean: float = 31.9
    episode_duration_sd: float = 33.2
    precursor_lead: float = 60.0
    effects: EffectSizes = field(default_factory=EffectSizes)
    heterogeneity_sd: float = 0.8
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.n_participants <= 0 or self.sessions_per_participant <= 0:
            raise ConfigError("participant and session counts must be positive")
        if self.session_duration <= 0 or self.precursor_lead <= 0:
            raise ConfigError("durations must be positive")
        if self.episode_rate < 0:
            raise ConfigError("episode_rate must be >= 0")
        if self.episode_duration_mean <= 0 or self.episode_duration_sd < 0:
            raise ConfigError("episode duration parameters must be positive")
        if self.heterogeneity_sd < 0:
            raise ConfigError("heterogeneity_sd must be >= 0")
        for name, value in self.effects.as_dict().items():
            if not math.isfinite(value):
                raise ConfigError(f"effect size {name} must be finite")

    @staticmethod
    def from_dict(doc: dict) -> "PopulationConfig":
        doc = dict(doc or {})
        effects = doc.pop("effects", None)
        cfg = {}
        for key in ("n_participants", "sessions_per_participant", "session_duration",
                    "episode_rate", "episode_duration_mean", "episode_duration_sd",
                    "precursor_lead", "heterogeneity_sd", "seed"):
            if key in doc:
                cfg[key] = doc.pop(key)
        if doc:
            raise ConfigError(f"unknown population config keys: {sorted(doc)}")
        if effects is not None:
            cfg["effects"] = EffectSizes(**effects)
        return PopulationConfig(**cfg)

    def to_dict(self) -> dict:
        return {
            "n_participants": self.n_participants,
            "sessions_per_participant": self.sessions_per_participant,
            "session_duration": self.session_duration,
            "episode_rate": self.episode_rate,
            "episode_duration_mean": self.episode_duration_mean,
            "episode_duration_sd": self.episode_duration_sd,
            "precursor_lead": self.precursor_lead,
            "effects": self.effects.as_dict(),
            "heterogeneity_sd": self.heterogeneity_sd,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class _ParticipantProfile:
    eda_base: float
    eda_noise_sd: float
    ibi_base: float
    ibi_jitter_sd: float
    bvp_base: float
    bvp_amp: float
    acc_std: float
    acc_means: np.ndarray
    factors: np.ndarray  # per-channel scaling of effect sizes (eda, bvp, ibi, acc)


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def _participant_profile(config: PopulationConfig, p: int) -> _ParticipantProfile:
    # Every level and scale parameter varies across participants so that each
    # bin statistic is anchored to the person far more than to the individual
    # window; pooled models then see participants, not window noise.
    # The precursor response is heterogeneous per participant AND per channel,
    # in magnitude and (for large heterogeneity_sd) direction, which is what
    # makes person-dependent models strictly better informed than pooled ones.
    rng = _rng(config.seed, 101, p)
    return _ParticipantProfile(
        eda_base=rng.uniform(2.0, 10.0),
        eda_noise_sd=rng.uniform(*_EDA_NOISE_RANGE),
        ibi_base=rng.uniform(0.65, 0.95),
        ibi_jitter_sd=rng.uniform(*_IBI_JITTER_RANGE),
        bvp_base=rng.uniform(-150.0, 150.0),
        bvp_amp=rng.uniform(30.0, 70.0),
        acc_std=rng.uniform(8.0, 18.0),
        acc_means=rng.uniform(-80.0, 80.0, size=3),
        factors=1.0 + config.heterogeneity_sd * rng.standard_normal(4),
    )


def _draw_episodes(config: PopulationConfig, rng) -> tuple[AggressionEpisode, ...]:
    """Homogeneous point process: expected count = rate * duration, uniform times.

    Two variance controls keep realized label prevalence nearly identical
    across sessions, so a pooled model cannot gain from recognizing
    participants by their channel baselines alone (the null-control property
    of the acceptance gate):

    * the count is the deterministic floor of the expectation plus one
      Bernoulli draw for the fractional part;
    * durations come from stratified inverse-CDF sampling of the clipped
      normal (marginal distribution unchanged, per-session total stabilized).
    """
    duration = config.session_duration
    expected = config.episode_rate * duration / 3600.0
    count = int(math.floor(expected))
    if rng.uniform() < expected - count:
        count += 1
    starts = np.sort(rng.uniform(0.0, duration, size=count))
    if count:
        u = (rng.permutation(count) + rng.uniform(0.0, 1.0, size=count)) / count
        u = np.clip(u, 1e-12, 1.0 - 1e-12)  # inv_cdf needs the open interval
        quantiles = np.array([NormalDist().inv_cdf(v) for v in u])
        lengths = np.clip(
            config.episode_duration_mean + config.episode_duration_sd * quantiles,
            5.0, 300.0)
    else:
        lengths = np.empty(0)
    episodes = [
        AggressionEpisode(float(t), min(float(t) + float(length), duration))
        for t, length in zip(starts, lengths)
    ]
    return merge_episodes(episodes)


def _precursor_windows(episodes, lead: float) -> tuple[np.ndarray, np.ndarray]:
    """Union of [onset - lead, onset) intervals, merged and sorted."""
    raw = [(max(0.0, ep.start - lead), ep.start) for ep in episodes if ep.start > 0]
    starts, ends = [], []
    for s, e in sorted(raw):
        if starts and s <= ends[-1]:
            ends[-1] = max(ends[-1], e)
        else:
            starts.append(s)
            ends.append(e)
    return np.array(starts), np.array(ends)


def _inside(windows, ts: np.ndarray) -> np.ndarray:
    starts, ends = windows
    if len(starts) == 0:
        return np.zeros(len(ts), dtype=bool)
    idx = np.searchsorted(starts, ts, side="right") - 1
    valid = idx >= 0
    out = np.zeros(len(ts), dtype=bool)
    out[valid] = ts[valid] < ends[idx[valid]]
    return out


def _ramp(windows, ts: np.ndarray) -> np.ndarray:
    """0 outside precursor windows, rising linearly to 1 at each onset."""
    starts, ends = windows
    out = np.zeros(len(ts))
    if len(starts) == 0:
        return out
    idx = np.searchsorted(starts, ts, side="right") - 1
    valid = idx >= 0
    inside = np.zeros(len(ts), dtype=bool)
    inside[valid] = ts[valid] < ends[idx[valid]]
    i = idx[inside]
    out[inside] = (ts[inside] - starts[i]) / (ends[i] - starts[i])
    return out


def _uniform_times(rate: float, duration: float) -> np.ndarray:
    n = int(math.floor(rate * duration + 1e-9))
    return np.arange(n) / rate


def _generate_session(config: PopulationConfig, profile: _ParticipantProfile,
                      p: int, s: int) -> Session:
    duration = config.session_duration
    eff = config.effects
    h_eda, h_bvp, h_ibi, h_acc = profile.factors

    episodes = _draw_episodes(config, _rng(config.seed, 201, p, s))
    windows = _precursor_windows(episodes, config.precursor_lead)

    # EDA: participant baseline + slow random-walk drift + level ramp precursor
    ts = _uniform_times(4.0, duration)
    rng = _rng(config.seed, 301, p, s)
    drift = np.cumsum(rng.normal(0.0, _EDA_DRIFT_STEP_SD, len(ts)))
    eda_values = (profile.eda_base + drift
                  + eff.eda * h_eda * _ramp(windows, ts)
                  + rng.normal(0.0, profile.eda_noise_sd, len(ts)))
    eda = SignalChannel.uniform("EDA", 4.0, eda_values)

    # BVP: pulse wave whose amplitude and beat rate shift inside precursors.
    # Phase diffusion (beat-to-beat variability) keeps the carrier from acting
    # as a session clock that distant bins could be aligned against.
    ts = _uniform_times(64.0, duration)
    rng = _rng(config.seed, 302, p, s)
    inside = _inside(windows, ts)
    ibi_t = profile.ibi_base * (1.0 - eff.ibi * h_ibi * inside)
    jitter = 1.0 + _BVP_PHASE_JITTER * rng.standard_normal(len(ts))
    phase = np.cumsum((1.0 / 64.0) / ibi_t * jitter)
    amp = profile.bvp_amp * (1.0 + eff.bvp * h_bvp * inside)
    bvp_values = profile.bvp_base + amp * np.sin(2.0 * np.pi * phase) + rng.normal(
        0.0, profile.bvp_amp * _BVP_NOISE_FRACTION, len(ts))
    bvp = SignalChannel.uniform("BVP", 64.0, bvp_values)

    # IBI: event stream of beat intervals, shortened inside precursors
    rng = _rng(config.seed, 303, p, s)
    starts, ends = windows
    times, values = [], []
    t = 0.0
    while True:
        shorten = 0.0
        if len(starts):
            i = int(np.searchsorted(starts, t, side="right")) - 1
            if i >= 0 and t < ends[i]:
                shorten = eff.ibi * h_ibi
        interval = max(
            profile.ibi_base * (1.0 - shorten) + rng.normal(0.0, profile.ibi_jitter_sd),
            _IBI_FLOOR)
        t += interval
        if t >= duration:
            break
        times.append(t)
        values.append(interval)
    ibi = SignalChannel.events("IBI", times, values)

    # ACC: per-axis noise whose std grows inside precursors
    ts = _uniform_times(32.0, duration)
    inside = _inside(windows, ts)
    mult = np.abs(1.0 + eff.acc * h_acc * inside)
    acc = {}
    for axis, tag in enumerate(("X", "Y", "Z")):
        rng = _rng(config.seed, 304 + axis, p, s)
        values = profile.acc_means[axis] + rng.normal(0.0, 1.0, len(ts)) * profile.acc_std * mult
        acc[f"ACC_{tag}"] = SignalChannel.uniform(f"ACC_{tag}", 32.0, values)

    return Session(
        participant_id=f"P{p + 1:02d}",
        session_id=f"S{s + 1:02d}",
        duration=duration,
        channels={"BVP": bvp, "IBI": ibi, "EDA": eda, **acc},
        episodes=episodes,
    )


def generate_population(config: PopulationConfig) -> list[Session]:
    """Generate the full population; a pure function of the config (seed included)."""
    sessions = []
    for p in range(config.n_participants):
        profile = _participant_profile(config, p)
        for s in range(config.sessions_per_participant):
            sessions.append(_generate_session(config, profile, p, s))
    return sessions


def generate_null(config: PopulationConfig) -> list[Session]:
    """Same population with all effect sizes forced to zero.

    Episodes (and therefore labels) are unchanged; the channels carry no
    precursor signal.
    """
    return generate_population(replace(config, effects=config.effects.zeroed()))
