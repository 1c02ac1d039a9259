"""Predict imminent aggression onset from preceding windows of wearable biosignals.

Library layout:

* :mod:`aggonset.timeline` -- sessions, channels, episodes, decision points
* :mod:`aggonset.ingest` -- CSV export formats and session manifests
* :mod:`aggonset.synthgen` -- seeded synthetic populations with precursors
* :mod:`aggonset.features` -- windowed feature extraction and labels
* :mod:`aggonset.glm` -- ridge-regularized logistic regression
* :mod:`aggonset.schemes` -- global / person-dependent / k-hybrid training
* :mod:`aggonset.harness` -- cross-validation, ROC/AUC, experiment sweeps
* :mod:`aggonset.report` -- CSV tables and figures for a finished sweep
"""

__version__ = "0.1.0"

from .features import FeatureLayout, FeatureSubset, assemble, extract_dataset, label
from .glm import RidgeLogisticModel, fit, predict_proba
from .harness import ExperimentConfig, auc, make_folds, roc_band, roc_curve, run_experiment
from .ingest import load_session, load_sessions, write_population, write_session
from .report import emit_report
from .schemes import (
    SchemeKind,
    SchemeSpec,
    parameter_count,
    train_global,
    train_k_hybrid,
    train_person_dependent,
)
from .synthgen import EffectSizes, PopulationConfig, generate_null, generate_population
from .timeline import (
    AggressionEpisode,
    Session,
    SignalChannel,
    channel_slice,
    decision_points,
    episode_overlaps,
)

__all__ = [
    "AggressionEpisode",
    "EffectSizes",
    "ExperimentConfig",
    "FeatureLayout",
    "FeatureSubset",
    "PopulationConfig",
    "RidgeLogisticModel",
    "SchemeKind",
    "SchemeSpec",
    "Session",
    "SignalChannel",
    "assemble",
    "auc",
    "channel_slice",
    "decision_points",
    "emit_report",
    "episode_overlaps",
    "extract_dataset",
    "fit",
    "generate_null",
    "generate_population",
    "label",
    "load_session",
    "load_sessions",
    "make_folds",
    "parameter_count",
    "predict_proba",
    "roc_band",
    "roc_curve",
    "run_experiment",
    "train_global",
    "train_k_hybrid",
    "train_person_dependent",
    "write_population",
    "write_session",
]
