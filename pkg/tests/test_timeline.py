import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggonset.errors import ConfigError, DataError
from aggonset.timeline import (
    AggressionEpisode,
    Session,
    SignalChannel,
    channel_slice,
    decision_points,
    episode_overlaps,
    merge_episodes,
)


def uniform_channel(name="EDA", rate=4.0, n=240, start=0.0, seed=0):
    values = np.random.default_rng(seed).normal(5.0, 1.0, n)
    return SignalChannel.uniform(name, rate, values, start_offset=start)


class TestChannelSlice:
    def test_eda_first_window_has_60_values(self):
        ch = uniform_channel(rate=4.0, n=240)
        assert len(channel_slice(ch, 0.0, 15.0)) == 60

    def test_bvp_second_window_has_960_values(self):
        ch = uniform_channel(name="BVP", rate=64.0, n=64 * 60)
        assert len(channel_slice(ch, 15.0, 30.0)) == 960

    def test_event_channel_half_open_membership(self):
        ch = SignalChannel.events("IBI", [2.0, 9.5, 20.1], [0.8, 0.82, 0.79])
        got = channel_slice(ch, 0.0, 15.0)
        assert list(got) == [0.8, 0.82]

    def test_invalid_range_rejected(self):
        ch = uniform_channel()
        with pytest.raises(ValueError):
            channel_slice(ch, 15.0, 15.0)

    def test_respects_start_offset(self):
        ch = uniform_channel(rate=4.0, n=60, start=30.0)
        assert len(channel_slice(ch, 0.0, 30.0)) == 0
        assert len(channel_slice(ch, 30.0, 45.0)) == 60

    def test_empty_slice_allowed_beyond_extent(self):
        ch = uniform_channel(rate=4.0, n=60)  # 15 s of data
        assert len(channel_slice(ch, 30.0, 45.0)) == 0

    @settings(max_examples=50, deadline=None)
    @given(
        t0=st.integers(min_value=0, max_value=20),
        span1=st.integers(min_value=1, max_value=10),
        span2=st.integers(min_value=1, max_value=10),
    )
    def test_concatenation_property(self, t0, span1, span2):
        ch = uniform_channel(rate=4.0, n=600, seed=3)
        a, b, c = float(t0), float(t0 + span1), float(t0 + span1 + span2)
        joined = np.concatenate([channel_slice(ch, a, b), channel_slice(ch, b, c)])
        assert np.array_equal(joined, channel_slice(ch, a, c))


class TestEpisodeOverlaps:
    def test_episode_start_inside_query(self):
        eps = [AggressionEpisode(100.0, 130.0)]
        assert episode_overlaps(eps, 60.0, 120.0)

    def test_episode_ending_at_open_boundary_does_not_count(self):
        eps = [AggressionEpisode(100.0, 130.0)]
        assert not episode_overlaps(eps, 130.0, 190.0)

    def test_empty_episode_list(self):
        assert not episode_overlaps([], 0.0, 100.0)

    @settings(max_examples=30, deadline=None)
    @given(st.permutations(list(range(5))))
    def test_permutation_invariance(self, order):
        eps = [AggressionEpisode(10.0 * i + 1, 10.0 * i + 5) for i in range(5)]
        shuffled = [eps[i] for i in order]
        for t0, t1 in [(0.0, 3.0), (12.0, 26.0), (44.0, 60.0)]:
            assert episode_overlaps(eps, t0, t1) == episode_overlaps(shuffled, t0, t1)


class TestMergeEpisodes:
    def test_overlapping_merged(self):
        merged = merge_episodes([AggressionEpisode(100.0, 130.0),
                                 AggressionEpisode(125.0, 140.0)])
        assert merged == (AggressionEpisode(100.0, 140.0),)

    def test_touching_merged_and_sorted(self):
        merged = merge_episodes([AggressionEpisode(50.0, 60.0),
                                 AggressionEpisode(10.0, 20.0),
                                 AggressionEpisode(20.0, 30.0)])
        assert merged == (AggressionEpisode(10.0, 30.0), AggressionEpisode(50.0, 60.0))

    def test_invalid_interval_rejected(self):
        with pytest.raises(DataError):
            AggressionEpisode(50.0, 40.0)


def _session_with(duration, episodes):
    channels = {
        "BVP": uniform_channel("BVP", 64.0, int(64 * duration)),
        "EDA": uniform_channel("EDA", 4.0, int(4 * duration)),
        "IBI": SignalChannel.events("IBI", [1.0], [0.8]),
        "ACC_X": uniform_channel("ACC_X", 32.0, int(32 * duration)),
        "ACC_Y": uniform_channel("ACC_Y", 32.0, int(32 * duration)),
        "ACC_Z": uniform_channel("ACC_Z", 32.0, int(32 * duration)),
    }
    return Session(participant_id="P01", session_id="S01", duration=duration,
                   channels=channels, episodes=tuple(episodes))


class TestDecisionPoints:
    def test_hour_session_with_minute_windows(self):
        session = _session_with(3600.0, [])
        points = decision_points(session, 60.0, 60.0)
        assert len(points) == 233
        assert points[0].t == 60.0
        assert points[-1].t + 60.0 <= 3600.0

    def test_window_does_not_fit(self):
        session = _session_with(100.0, [])
        assert decision_points(session, 60.0, 60.0) == []

    def test_short_session_enumeration(self):
        session = _session_with(135.0, [])
        assert [p.t for p in decision_points(session, 60.0, 60.0)] == [60.0, 75.0]

    def test_non_multiple_of_stride_rejected(self):
        session = _session_with(600.0, [])
        with pytest.raises(ConfigError):
            decision_points(session, 50.0, 60.0)
        with pytest.raises(ConfigError):
            decision_points(session, 60.0, -15.0)

    def test_stride_and_bounds_invariants(self):
        session = _session_with(1234.5, [])
        for tau_p, tau_f in [(15.0, 15.0), (60.0, 30.0), (120.0, 90.0)]:
            ts = [p.t for p in decision_points(session, tau_p, tau_f)]
            assert all(b - a == 15.0 for a, b in zip(ts, ts[1:]))
            assert all(t - tau_p >= 0 and t + tau_f <= session.duration for t in ts)


class TestSessionValidation:
    def test_missing_channel_rejected(self):
        session = _session_with(60.0, [])
        channels = dict(session.channels)
        del channels["EDA"]
        with pytest.raises(DataError):
            Session("P01", "S01", 60.0, channels)

    def test_episode_beyond_duration_rejected(self):
        with pytest.raises(DataError):
            _session_with(60.0, [AggressionEpisode(10.0, 70.0)])

    def test_overlapping_episodes_merged_at_construction(self):
        session = _session_with(200.0, [AggressionEpisode(10.0, 30.0),
                                        AggressionEpisode(25.0, 40.0)])
        assert session.episodes == (AggressionEpisode(10.0, 40.0),)

    def test_non_finite_samples_rejected(self):
        with pytest.raises(DataError):
            SignalChannel.uniform("EDA", 4.0, [1.0, float("nan")])

    def test_event_times_strictly_increasing(self):
        with pytest.raises(DataError):
            SignalChannel.events("IBI", [2.0, 1.5], [0.9, 0.7])
