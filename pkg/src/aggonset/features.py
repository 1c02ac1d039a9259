"""Windowed predictor extraction: per-bin statistics, temporal history, labels.

A decision point ``t`` turns into one fixed-layout vector: ten statistics per
channel per 15 s bin of ``[t - tau_p, t)``, two temporal-history features per
bin, and the standard deviation of every per-bin feature across bins.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError, LayoutMismatchError
from .timeline import (
    PHYSICAL_CHANNELS,
    PHYSIOLOGICAL_CHANNELS,
    STRIDE,
    AggressionEpisode,
    Session,
    SignalChannel,
    channel_slice,
    decision_points,
    episode_overlaps,
)

#: Per-bin statistics, in layout order.
STAT_NAMES = ("first", "last", "max", "min", "mean", "median", "n_unique", "sum", "std", "var")

TEMPORAL_SOURCES = ("TPA", "AOF")


class FeatureSubset(Enum):
    """The five predictor subsets."""

    TEMPORAL = "temporal"
    PHYSICAL = "physical"
    PHYSIOLOGICAL = "physiological"
    PHYSICAL_PHYSIOLOGICAL = "physical+physiological"
    ALL = "all"

    @property
    def channels(self) -> tuple[str, ...]:
        if self is FeatureSubset.TEMPORAL:
            return ()
        if self is FeatureSubset.PHYSICAL:
            return PHYSICAL_CHANNELS
        if self is FeatureSubset.PHYSIOLOGICAL:
            return PHYSIOLOGICAL_CHANNELS
        return PHYSIOLOGICAL_CHANNELS + PHYSICAL_CHANNELS

    @property
    def include_temporal(self) -> bool:
        return self in (FeatureSubset.TEMPORAL, FeatureSubset.ALL)

    @staticmethod
    def parse(value) -> "FeatureSubset":
        if isinstance(value, FeatureSubset):
            return value
        try:
            return FeatureSubset(str(value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown feature subset {value!r}; expected one of "
                f"{[s.value for s in FeatureSubset]}"
            ) from None


@dataclass(frozen=True)
class BinStats:
    """The ten statistics of one channel's values within one 15 s bin."""

    first: float
    last: float
    max: float
    min: float
    mean: float
    median: float
    n_unique: float
    sum: float
    std: float
    var: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STAT_NAMES])


def _stats_vector(values: np.ndarray) -> np.ndarray:
    """The ten bin statistics as an array. Population std/variance."""
    v = np.asarray(values, dtype=float)
    var = float(np.var(v))
    return np.array([
        float(v[0]),
        float(v[-1]),
        float(np.max(v)),
        float(np.min(v)),
        float(np.mean(v)),
        float(np.median(v)),
        float(len(np.unique(v))),
        float(np.sum(v)),
        math.sqrt(var),
        var,
    ])


def bin_statistics(values) -> BinStats:
    """Compute the ten per-bin statistics of a non-empty value sequence.

    Raises:
        DataError: on empty input; empty bins are the caller's imputation case.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DataError("bin_statistics needs a non-empty bin; impute before calling")
    if not np.all(np.isfinite(v)):
        raise DataError("bin contains non-finite values")
    return BinStats(*_stats_vector(v))


def temporal_features(episodes: Sequence[AggressionEpisode], t_eval: float) -> tuple[float, float]:
    """Time-since-past-aggression and the aggression-observation flag at ``t_eval``.

    TPA is 0 while an episode is ongoing, the gap to the most recent episode
    end otherwise, and equal to the elapsed session time when no episode has
    started yet (AOF = 0 disambiguates that case).
    """
    if t_eval < 0:
        raise ValueError("t_eval must be non-negative")
    aof = 0.0
    tpa = float(t_eval)
    last_end = None
    for ep in episodes:
        if ep.start <= t_eval:
            aof = 1.0
            if t_eval < ep.end:
                return 0.0, aof  # ongoing
            last_end = ep.end
        else:
            break
    if last_end is not None:
        tpa = float(t_eval - last_end)
    return tpa, aof


@dataclass(frozen=True)
class FeatureDescriptor:
    """Identity of one predictor: source, statistic, and bin provenance."""

    source: str  # channel name, "TPA", or "AOF"
    statistic: str | None  # one of STAT_NAMES; None for temporal sources
    bin: int | None  # bin index within the window; None = std across bins
    group: str  # "physiological" | "physical" | "temporal"

    @property
    def name(self) -> str:
        stem = self.source if self.statistic is None else f"{self.source}_{self.statistic}"
        return f"{stem}_binstd" if self.bin is None else f"{stem}_bin{self.bin}"


def _group_of(source: str) -> str:
    if source in PHYSIOLOGICAL_CHANNELS:
        return "physiological"
    if source in PHYSICAL_CHANNELS:
        return "physical"
    return "temporal"


_LAYOUT_CACHE: dict[tuple[float, FeatureSubset], "FeatureLayout"] = {}


@dataclass(frozen=True)
class FeatureLayout:
    """Ordered feature identities for one (tau_p, subset) pair.

    Dimension is ``f * (B + 1)`` with ``B = tau_p / 15`` bins and ``f`` per-bin
    features: ten statistics per included channel plus TPA and AOF when the
    temporal group is included.
    """

    tau_p: float
    subset: FeatureSubset
    descriptors: tuple[FeatureDescriptor, ...]
    fingerprint: str

    @staticmethod
    def build(tau_p: float, subset: FeatureSubset) -> "FeatureLayout":
        subset = FeatureSubset.parse(subset)
        key = (float(tau_p), subset)
        cached = _LAYOUT_CACHE.get(key)
        if cached is not None:
            return cached
        if tau_p <= 0 or (tau_p % STRIDE) != 0:
            raise ConfigError(f"tau_p must be a positive multiple of {STRIDE:g}, got {tau_p}")
        n_bins = int(round(tau_p / STRIDE))
        per_bin: list[FeatureDescriptor] = []
        for b in range(n_bins):
            for ch in subset.channels:
                for stat in STAT_NAMES:
                    per_bin.append(FeatureDescriptor(ch, stat, b, _group_of(ch)))
            if subset.include_temporal:
                for src in TEMPORAL_SOURCES:
                    per_bin.append(FeatureDescriptor(src, None, b, "temporal"))
        across = [replace(d, bin=None) for d in per_bin[: len(per_bin) // n_bins]]
        descriptors = tuple(per_bin + across)
        names = [d.name for d in descriptors]
        digest = hashlib.sha256(
            f"{tau_p:g}|{subset.value}|".encode() + "|".join(names).encode()
        ).hexdigest()[:16]
        layout = FeatureLayout(float(tau_p), subset, descriptors, digest)
        _LAYOUT_CACHE[key] = layout
        return layout

    @property
    def d(self) -> int:
        return len(self.descriptors)

    @property
    def n_bins(self) -> int:
        return int(round(self.tau_p / STRIDE))

    @property
    def per_bin_width(self) -> int:
        return self.d // (self.n_bins + 1)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.descriptors)

    @property
    def groups(self) -> tuple[str, ...]:
        return tuple(d.group for d in self.descriptors)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LayoutMismatchError(f"feature {name!r} not in layout") from None


@dataclass(frozen=True)
class FeatureVector:
    """One decision point's predictor values plus provenance and label."""

    values: np.ndarray
    layout_fingerprint: str
    label: bool | None
    participant_id: str
    session_id: str
    t: float


def _imputed_singleton(channel: SignalChannel, t0: float) -> np.ndarray:
    # Empty bin: carry the last value observed before the bin; before any
    # observation, fall back to the channel's first value, then to 0.0.
    v = channel.last_value_before(t0)
    if v is None:
        v = channel.first_value()
    if v is None:
        v = 0.0
    return np.array([v])


def _bin_row(session: Session, grid_index: int, layout: FeatureLayout) -> np.ndarray:
    """Per-bin feature row for grid bin ``[15*g, 15*(g+1))``."""
    t0 = STRIDE * grid_index
    t1 = t0 + STRIDE
    row = np.empty(layout.per_bin_width)
    i = 0
    for name in layout.subset.channels:
        values = channel_slice(session.channels[name], t0, t1)
        if values.size == 0:
            values = _imputed_singleton(session.channels[name], t0)
        row[i : i + 10] = _stats_vector(values)
        i += 10
    if layout.subset.include_temporal:
        tpa, aof = temporal_features(session.episodes, t1)
        row[i] = tpa
        row[i + 1] = aof
    return row


def _window_values(per_bin: np.ndarray) -> np.ndarray:
    # per_bin is (B, f): bins in order, then the across-bins std block
    return np.concatenate([per_bin.ravel(), per_bin.std(axis=0)])


def assemble(session: Session, t: float, tau_p: float, subset) -> FeatureVector:
    """Unlabeled predictor vector at decision instant ``t`` from ``[t - tau_p, t)``."""
    layout = FeatureLayout.build(tau_p, subset)
    if t - tau_p < -1e-9 or (t % STRIDE) != 0:
        raise ValueError(f"t={t} is not a valid decision point for tau_p={tau_p}")
    g0 = int(round((t - tau_p) / STRIDE))
    per_bin = np.vstack([_bin_row(session, g0 + b, layout) for b in range(layout.n_bins)])
    return FeatureVector(
        values=_window_values(per_bin),
        layout_fingerprint=layout.fingerprint,
        label=None,
        participant_id=session.participant_id,
        session_id=session.session_id,
        t=float(t),
    )


def label(session: Session, t: float, tau_f: float) -> bool:
    """True iff some episode overlaps the upcoming window ``(t, t + tau_f]``."""
    if t + tau_f > session.duration + 1e-9:
        raise ValueError(f"label window ({t}, {t + tau_f}] exceeds session duration")
    return episode_overlaps(session.episodes, t, t + tau_f)


@dataclass(frozen=True)
class FeatureDataset:
    """Labeled feature vectors in deterministic (participant, session, t) order.

    Columnar for training efficiency; indexing yields ``FeatureVector`` views.
    """

    layout: FeatureLayout
    X: np.ndarray  # (n, d)
    y: np.ndarray  # (n,) bool
    participant_ids: tuple[str, ...]
    session_ids: tuple[str, ...]
    ts: np.ndarray  # (n,)

    def __len__(self) -> int:
        return len(self.y)

    def __getitem__(self, i: int) -> FeatureVector:
        return FeatureVector(
            values=self.X[i],
            layout_fingerprint=self.layout.fingerprint,
            label=bool(self.y[i]),
            participant_id=self.participant_ids[i],
            session_id=self.session_ids[i],
            t=float(self.ts[i]),
        )

    @property
    def participants(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.participant_ids)))

    def rows(self, indices) -> "FeatureDataset":
        idx = np.asarray(indices)
        return FeatureDataset(
            layout=self.layout,
            X=self.X[idx],
            y=self.y[idx],
            participant_ids=tuple(self.participant_ids[i] for i in idx),
            session_ids=tuple(self.session_ids[i] for i in idx),
            ts=self.ts[idx],
        )

    def project(self, subset) -> "FeatureDataset":
        """Column view restricted to another subset's layout (same tau_p)."""
        target = FeatureLayout.build(self.layout.tau_p, subset)
        if target is self.layout:
            return self
        positions = np.array([self.layout.index_of(name) for name in target.names])
        return FeatureDataset(
            layout=target,
            X=np.ascontiguousarray(self.X[:, positions]),
            y=self.y,
            participant_ids=self.participant_ids,
            session_ids=self.session_ids,
            ts=self.ts,
        )


def extract_dataset(
    sessions: Iterable[Session],
    tau_p: float,
    tau_f: float,
    subset,
    exclude_ongoing: bool = False,
) -> FeatureDataset:
    """One labeled vector per decision point per session.

    ``exclude_ongoing`` drops decision points that fall inside an episode
    (label semantics then cover genuine onsets only).
    """
    layout = FeatureLayout.build(tau_p, subset)
    ordered = sorted(sessions, key=lambda s: (s.participant_id, s.session_id))
    blocks: list[np.ndarray] = []
    labels: list[bool] = []
    pids: list[str] = []
    sids: list[str] = []
    ts: list[float] = []
    for session in ordered:
        points = decision_points(session, tau_p, tau_f)
        if exclude_ongoing:
            points = [
                p for p in points
                if not any(ep.start <= p.t < ep.end for ep in session.episodes)
            ]
        if not points:
            continue
        last_grid = int(round(points[-1].t / STRIDE))
        grid_rows = np.vstack([_bin_row(session, g, layout) for g in range(last_grid)])
        b = layout.n_bins
        for p in points:
            g = int(round(p.t / STRIDE))
            blocks.append(_window_values(grid_rows[g - b : g]))
            labels.append(label(session, p.t, tau_f))
            pids.append(session.participant_id)
            sids.append(session.session_id)
            ts.append(p.t)
    n = len(labels)
    X = np.vstack(blocks) if n else np.empty((0, layout.d))
    return FeatureDataset(
        layout=layout,
        X=X,
        y=np.array(labels, dtype=bool),
        participant_ids=tuple(pids),
        session_ids=tuple(sids),
        ts=np.array(ts, dtype=float),
    )


def write_dataset_csv(dataset: FeatureDataset, path) -> None:
    """Flat CSV: layout feature names, then label/participant/session/t columns."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(dataset.layout.names) + ["label", "participant_id", "session_id", "t"])
        for i in range(len(dataset)):
            row = [repr(float(v)) for v in dataset.X[i]]
            row += [str(int(dataset.y[i])), dataset.participant_ids[i],
                    dataset.session_ids[i], repr(float(dataset.ts[i]))]
            writer.writerow(row)


def read_dataset_csv(path) -> FeatureDataset:
    """Inverse of :func:`write_dataset_csv`; layout is rebuilt from the header."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-4:] != ["label", "participant_id", "session_id", "t"]:
            raise DataError("feature CSV must end with label/participant_id/session_id/t columns")
        names = header[:-4]
        layout = _layout_from_names(names)
        X_rows, ys, pids, sids, ts = [], [], [], [], []
        for row in reader:
            X_rows.append([float(v) for v in row[: len(names)]])
            ys.append(bool(int(row[-4])))
            pids.append(row[-3])
            sids.append(row[-2])
            ts.append(float(row[-1]))
    return FeatureDataset(
        layout=layout,
        X=np.array(X_rows, dtype=float) if X_rows else np.empty((0, layout.d)),
        y=np.array(ys, dtype=bool),
        participant_ids=tuple(pids),
        session_ids=tuple(sids),
        ts=np.array(ts, dtype=float),
    )


def _layout_from_names(names: list[str]) -> FeatureLayout:
    bins = [int(n.rsplit("_bin", 1)[1]) for n in names if not n.endswith("_binstd")]
    if not bins:
        raise DataError("cannot infer bin structure from feature names")
    tau_p = (max(bins) + 1) * STRIDE
    sources = {n.split("_bin")[0].rsplit("_", 1)[0] if "_bin" in n else n for n in names}
    has_temporal = any(n.startswith(("TPA_", "AOF_")) for n in names)
    has_physical = any(n.startswith("ACC_") for n in names)
    has_physio = any(n.startswith(("BVP_", "IBI_", "EDA_")) for n in names)
    if has_temporal and has_physical and has_physio:
        subset = FeatureSubset.ALL
    elif has_physical and has_physio:
        subset = FeatureSubset.PHYSICAL_PHYSIOLOGICAL
    elif has_physio:
        subset = FeatureSubset.PHYSIOLOGICAL
    elif has_physical:
        subset = FeatureSubset.PHYSICAL
    elif has_temporal:
        subset = FeatureSubset.TEMPORAL
    else:
        raise DataError(f"cannot infer feature subset from names {sorted(sources)[:4]}...")
    layout = FeatureLayout.build(tau_p, subset)
    if list(layout.names) != list(names):
        raise LayoutMismatchError("feature CSV header does not match the canonical layout")
    return layout
