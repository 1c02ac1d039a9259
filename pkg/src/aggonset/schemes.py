"""Training schemes over a split: global, person-dependent, k-hybrid.

The k-hybrid scheme fits a global model first, freezes the k largest-magnitude
standardized weights (ties broken by layout order), and refits the intercept
plus the remaining weights per participant against the frozen contribution,
carried as a per-sample offset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import glm
from .errors import ConfigError, DataError, RoutingError
from .features import FeatureDataset, FeatureVector


class SchemeKind(Enum):
    GLOBAL = "global"
    PERSON_DEPENDENT = "person_dependent"
    K_HYBRID = "k_hybrid"

    @staticmethod
    def parse(value) -> "SchemeKind":
        if isinstance(value, SchemeKind):
            return value
        try:
            return SchemeKind(str(value).lower())
        except ValueError:
            raise ConfigError(
                f"unknown scheme {value!r}; expected one of {[s.value for s in SchemeKind]}"
            ) from None


@dataclass(frozen=True)
class SchemeSpec:
    """One training configuration cell."""

    kind: SchemeKind
    tau_p: float
    tau_f: float
    subset: object  # FeatureSubset
    lam: float = 1.0
    k: int | None = None

    def __post_init__(self):
        if self.kind is SchemeKind.K_HYBRID:
            if self.k is None or self.k < 0:
                raise ConfigError("k-hybrid needs k >= 0")
        elif self.k is not None:
            raise ConfigError(f"k is only defined for k-hybrid schemes, not {self.kind.value}")


def parameter_count(kind, d: int, n_participants: int, k: int | None = None) -> int:
    """Trained weight count: d, d*S, or (d-k)*S + k. Intercepts excluded."""
    kind = SchemeKind.parse(kind)
    if kind is SchemeKind.GLOBAL:
        return d
    if kind is SchemeKind.PERSON_DEPENDENT:
        return d * n_participants
    if k is None or not (0 <= k <= d):
        raise ConfigError(f"k-hybrid needs 0 <= k <= d, got k={k}, d={d}")
    return (d - k) * n_participants + k


@dataclass(frozen=True)
class FrozenFeatures:
    """Identities and globally-trained weights of the frozen top-k features."""

    indices: np.ndarray  # in rank order (descending |weight|, ties by layout)
    weights: np.ndarray  # standardized-space weights from the global fit


@dataclass(frozen=True)
class TrainedScheme:
    """Prediction routing over the fitted model(s) of one scheme."""

    kind: SchemeKind
    lam: float
    layout_fingerprint: str
    global_model: glm.RidgeLogisticModel | None = None
    person_models: dict | None = None  # participant_id -> RidgeLogisticModel
    frozen: FrozenFeatures | None = None
    k: int | None = None

    @property
    def participants(self) -> tuple[str, ...]:
        return tuple(sorted(self.person_models)) if self.person_models else ()

    def _frozen_offset(self, X: np.ndarray) -> np.ndarray:
        g = self.global_model
        idx = self.frozen.indices
        Xs = (X[:, idx] - g.standardizer.mean[idx]) / g.standardizer.scale[idx]
        return Xs @ self.frozen.weights

    def predict_proba_batch(self, X: np.ndarray, participant_ids) -> np.ndarray:
        """Probabilities for rows of X, routed per participant."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind is SchemeKind.GLOBAL or (
            self.kind is SchemeKind.K_HYBRID and self.k == self.global_model.d
        ):
            return glm.predict_proba(self.global_model, X)
        pids = list(participant_ids)
        if len(pids) != X.shape[0]:
            raise DataError("participant_ids must match the number of rows")
        unknown = sorted(set(pids) - set(self.person_models))
        if unknown:
            raise RoutingError(f"no model for participant(s) {unknown}; "
                               "cold-start prediction is out of scope")
        offset = self._frozen_offset(X) if self.kind is SchemeKind.K_HYBRID else None
        out = np.empty(X.shape[0])
        order = np.argsort(pids, kind="stable")
        i = 0
        while i < len(order):
            j = i
            pid = pids[order[i]]
            while j < len(order) and pids[order[j]] == pid:
                j += 1
            rows = order[i:j]
            off = offset[rows] if offset is not None else None
            out[rows] = glm.predict_proba(self.person_models[pid], X[rows], offset=off)
            i = j
        return out

    def predict(self, sample: FeatureVector) -> float:
        """Probability for one feature vector (routing per its participant)."""
        return float(self.predict_proba_batch(
            sample.values[None, :], [sample.participant_id])[0])


def _class_counts(y: np.ndarray) -> tuple[int, int]:
    pos = int(np.count_nonzero(y))
    return pos, len(y) - pos


def _fit_or_fallback(X, y, lam, options=None, *, fingerprint, meta):
    # Folds with fewer than two samples of either class get the degenerate
    # intercept-only model; everything else is a regular fit.
    pos, neg = _class_counts(y)
    if pos < 2 or neg < 2:
        return glm.fit_intercept_only(X, y, lam, layout_fingerprint=fingerprint,
                                      trained_on=dict(meta, degenerate=True))
    return glm.fit(X, y, lam, options, layout_fingerprint=fingerprint, trained_on=meta)


def train_global(train: FeatureDataset, lam: float = 1.0, *, trained_on: dict | None = None,
                 global_model: glm.RidgeLogisticModel | None = None) -> TrainedScheme:
    """Pool all samples across participants into a single fit."""
    meta = dict(trained_on or {}, scheme=SchemeKind.GLOBAL.value)
    model = global_model if global_model is not None else glm.fit(
        train.X, train.y, lam, layout_fingerprint=train.layout.fingerprint, trained_on=meta)
    return TrainedScheme(kind=SchemeKind.GLOBAL, lam=lam,
                         layout_fingerprint=train.layout.fingerprint, global_model=model)


def train_person_dependent(train: FeatureDataset, lam: float = 1.0, *,
                           trained_on: dict | None = None) -> TrainedScheme:
    """One fit per participant on that participant's samples."""
    meta = dict(trained_on or {}, scheme=SchemeKind.PERSON_DEPENDENT.value)
    pids = np.asarray(train.participant_ids)
    models = {}
    for pid in train.participants:
        rows = np.flatnonzero(pids == pid)
        models[pid] = _fit_or_fallback(
            train.X[rows], train.y[rows], lam,
            fingerprint=train.layout.fingerprint, meta=dict(meta, participant=pid))
    return TrainedScheme(kind=SchemeKind.PERSON_DEPENDENT, lam=lam,
                         layout_fingerprint=train.layout.fingerprint, person_models=models)


def rank_features(global_model: glm.RidgeLogisticModel, pool: np.ndarray) -> np.ndarray:
    """Pool indices ordered by descending |standardized weight|, ties by layout order."""
    magnitudes = np.abs(global_model.weights[pool])
    order = np.argsort(-magnitudes, kind="stable")
    return pool[order]


def train_k_hybrid(train: FeatureDataset, lam: float = 1.0, k: int = 0,
                   rank_pool: str = "all", *, trained_on: dict | None = None,
                   global_model: glm.RidgeLogisticModel | None = None) -> TrainedScheme:
    """Two-stage hybrid: global fit, freeze top-k weights, refit the rest per person.

    ``k = 0`` reduces exactly to person-dependent training; ``k = d`` returns
    the global model for every participant by definition. ``rank_pool`` limits
    the rankable features to ``"biomarker"`` (non-temporal) when requested.
    """
    d = train.layout.d
    if not 0 <= k <= d:
        raise ConfigError(f"k must lie in [0, {d}], got {k}")
    meta = dict(trained_on or {}, scheme=SchemeKind.K_HYBRID.value, k=k)
    if global_model is None:
        global_model = glm.fit(train.X, train.y, lam,
                               layout_fingerprint=train.layout.fingerprint,
                               trained_on=dict(meta, stage="global"))
    if k == d:
        return TrainedScheme(kind=SchemeKind.K_HYBRID, lam=lam,
                             layout_fingerprint=train.layout.fingerprint,
                             global_model=global_model, k=k)

    if rank_pool == "all":
        pool = np.arange(d)
    elif rank_pool == "biomarker":
        pool = np.flatnonzero(np.asarray(train.layout.groups) != "temporal")
    else:
        raise ConfigError(f"rank_pool must be 'all' or 'biomarker', got {rank_pool!r}")
    if k > len(pool):
        raise ConfigError(f"k={k} exceeds the {len(pool)} rankable features "
                          f"of pool {rank_pool!r}")
    frozen_idx = rank_features(global_model, pool)[:k]
    frozen = FrozenFeatures(indices=frozen_idx, weights=global_model.weights[frozen_idx])

    free_mask = np.ones(d, dtype=bool)
    free_mask[frozen_idx] = False
    gs = global_model.standardizer
    offsets = (
        ((train.X[:, frozen_idx] - gs.mean[frozen_idx]) / gs.scale[frozen_idx]) @ frozen.weights
        if k else np.zeros(len(train))
    )

    pids = np.asarray(train.participant_ids)
    models = {}
    for pid in train.participants:
        rows = np.flatnonzero(pids == pid)
        options = glm.FitOptions(offset=offsets[rows] if k else None, free_mask=free_mask)
        models[pid] = _fit_or_fallback(
            train.X[rows], train.y[rows], lam, options,
            fingerprint=train.layout.fingerprint, meta=dict(meta, participant=pid))
    return TrainedScheme(kind=SchemeKind.K_HYBRID, lam=lam,
                         layout_fingerprint=train.layout.fingerprint,
                         global_model=global_model, person_models=models,
                         frozen=frozen, k=k)


def train_scheme(spec: SchemeSpec, train: FeatureDataset, rank_pool: str = "all", *,
                 trained_on: dict | None = None,
                 global_model: glm.RidgeLogisticModel | None = None) -> TrainedScheme:
    if spec.kind is SchemeKind.GLOBAL:
        return train_global(train, spec.lam, trained_on=trained_on, global_model=global_model)
    if spec.kind is SchemeKind.PERSON_DEPENDENT:
        return train_person_dependent(train, spec.lam, trained_on=trained_on)
    return train_k_hybrid(train, spec.lam, spec.k, rank_pool,
                          trained_on=trained_on, global_model=global_model)


# -- serialization ---------------------------------------------------------

_SCHEME_FORMAT = "aggonset-scheme-v1"


def scheme_to_dict(scheme: TrainedScheme) -> dict:
    doc = {
        "format": _SCHEME_FORMAT,
        "kind": scheme.kind.value,
        "lambda": scheme.lam,
        "layout_fingerprint": scheme.layout_fingerprint,
        "k": scheme.k,
        "global_model": (glm.model_to_dict(scheme.global_model)
                         if scheme.global_model is not None else None),
        "person_models": ({pid: glm.model_to_dict(m)
                           for pid, m in sorted(scheme.person_models.items())}
                          if scheme.person_models is not None else None),
        "frozen": ({"indices": [int(i) for i in scheme.frozen.indices],
                    "weights": [float(w) for w in scheme.frozen.weights]}
                   if scheme.frozen is not None else None),
    }
    return doc


def scheme_from_dict(doc: dict) -> TrainedScheme:
    if doc.get("format") != _SCHEME_FORMAT:
        raise DataError(f"not a {_SCHEME_FORMAT} document")
    frozen = None
    if doc.get("frozen") is not None:
        frozen = FrozenFeatures(indices=np.array(doc["frozen"]["indices"], dtype=int),
                                weights=np.array(doc["frozen"]["weights"], dtype=float))
    return TrainedScheme(
        kind=SchemeKind.parse(doc["kind"]),
        lam=float(doc["lambda"]),
        layout_fingerprint=doc.get("layout_fingerprint", ""),
        global_model=(glm.model_from_dict(doc["global_model"])
                      if doc.get("global_model") else None),
        person_models=({pid: glm.model_from_dict(m)
                        for pid, m in doc["person_models"].items()}
                       if doc.get("person_models") else None),
        frozen=frozen,
        k=doc.get("k"),
    )


def save_scheme(scheme: TrainedScheme, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scheme_to_dict(scheme), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scheme(path) -> TrainedScheme:
    with open(path, encoding="utf-8") as fh:
        return scheme_from_dict(json.load(fh))
