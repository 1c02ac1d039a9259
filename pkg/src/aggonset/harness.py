"""Cross-validation protocol, ROC/AUC, and the experiment sweep runner.

Evaluation semantics mirror the reporting conventions of the study design:
AUC for pooled (global) models is computed over all test samples of a
repetition; person-dependent and hybrid AUCs are computed per participant,
averaged across repetitions, and summarized by mean and SD across
participants. ROC bands use vertical averaging across repetitions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from statistics import NormalDist

import numpy as np

from . import glm
from .errors import AggonsetError, ConfigError, UndefinedAucError
from .features import FeatureDataset, FeatureSubset, extract_dataset
from .ingest import load_sessions
from .schemes import SchemeKind, SchemeSpec, parameter_count, train_scheme
from .synthgen import DEFAULT_SEED, PopulationConfig, generate_population

LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


# -- fold plans --------------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    """Per-repeat fold assignment of every sample."""

    n_folds: int
    n_repeats: int
    seed: int
    stratified: bool
    assignment: np.ndarray  # (n_repeats, n_samples) fold ids

    @property
    def n_samples(self) -> int:
        return self.assignment.shape[1]

    def test_indices(self, repeat: int, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment[repeat] == fold)

    def train_indices(self, repeat: int, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment[repeat] != fold)


def _repeat_rng(seed: int, repeat: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(repeat, *extra)))


def make_folds(labels, n_folds: int = 5, n_repeats: int = 5, seed: int = 0,
               stratified: bool = True, groups=None) -> FoldPlan:
    """Seeded fold assignment; fold sizes differ by at most one.

    Stratified plans deal each class separately (per-fold class counts within
    one sample of each other). ``groups`` switches to group-level assignment:
    all samples of a group land in the same fold (session fold unit).
    """
    y = np.asarray(labels, dtype=bool)
    n = len(y)
    if n_folds < 2:
        raise ConfigError("need at least 2 folds")
    if n < n_folds:
        raise ConfigError(f"need at least {n_folds} samples, got {n}")
    assignment = np.empty((n_repeats, n), dtype=np.int32)
    for r in range(n_repeats):
        rng = _repeat_rng(seed, r)
        if groups is None:
            ptr = 0
            classes = (True, False) if stratified else (None,)
            for cls in classes:
                idx = np.arange(n) if cls is None else np.flatnonzero(y == cls)
                idx = idx[rng.permutation(len(idx))]
                assignment[r, idx] = (ptr + np.arange(len(idx))) % n_folds
                ptr += len(idx)
        else:
            keys = list(groups)
            uniq = sorted(set(keys))
            if len(uniq) < n_folds:
                raise ConfigError(f"need at least {n_folds} groups for session folds, "
                                  f"got {len(uniq)}")
            order = [uniq[i] for i in rng.permutation(len(uniq))]
            if stratified:
                has_pos = {g: False for g in uniq}
                for g, yi in zip(keys, y):
                    has_pos[g] = has_pos[g] or bool(yi)
                order = [g for g in order if has_pos[g]] + [g for g in order if not has_pos[g]]
            fold_of = {g: i % n_folds for i, g in enumerate(order)}
            assignment[r] = [fold_of[g] for g in keys]
    return FoldPlan(n_folds=n_folds, n_repeats=n_repeats, seed=seed,
                    stratified=stratified, assignment=assignment)


def restrict_plan_for_participants(plan: FoldPlan, participant_ids, labels) -> FoldPlan:
    """Amend the plan per participant where restriction degenerates.

    When a participant's training slice of some (repeat, fold) is single-class
    even though the participant has both classes, that participant's rows are
    re-dealt with within-participant stratification. All other rows keep the
    shared assignment, preserving paired comparisons.
    """
    y = np.asarray(labels, dtype=bool)
    pids = np.asarray(participant_ids)
    assignment = plan.assignment.copy()
    for p_index, pid in enumerate(sorted(set(participant_ids))):
        rows = np.flatnonzero(pids == pid)
        y_p = y[rows]
        n_pos = int(y_p.sum())
        n_neg = len(y_p) - n_pos
        if n_pos == 0 or n_neg == 0:
            continue  # degenerate fallback handles fully single-class participants
        for r in range(plan.n_repeats):
            folds_p = assignment[r, rows]
            bad = any(
                ((y_p[folds_p != f].sum() == 0) or ((~y_p[folds_p != f]).sum() == 0))
                for f in range(plan.n_folds)
            )
            if not bad:
                continue
            rng = _repeat_rng(plan.seed, r, 7001, p_index)
            ptr = 0
            for cls in (True, False):
                idx = rows[np.flatnonzero(y_p == cls)]
                idx = idx[rng.permutation(len(idx))]
                assignment[r, idx] = (ptr + np.arange(len(idx))) % plan.n_folds
                ptr += len(idx)
    return replace(plan, assignment=assignment)


# -- ROC / AUC ---------------------------------------------------------------

def _validate_classes(labels) -> tuple[np.ndarray, int, int]:
    y = np.asarray(labels, dtype=bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAucError("AUC needs at least one positive and one negative label")
    return y, n_pos, n_neg


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(random positive outscores random negative), ties half."""
    y, n_pos, n_neg = _validate_classes(labels)
    s = np.asarray(scores, dtype=float)
    order = np.argsort(s, kind="mergesort")
    s_sorted = s[order]
    ranks = np.empty(len(s))
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s_sorted[j] == s_sorted[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j - 1) + 1.0  # mid-rank, 1-based
        i = j
    pos_rank_sum = float(ranks[y].sum())
    return (pos_rank_sum - 0.5 * n_pos * (n_pos + 1)) / (n_pos * n_neg)


@dataclass(frozen=True)
class RocCurve:
    """Threshold-sweep ROC; starts at (0,0), ends at (1,1), monotone."""

    fpr: np.ndarray
    tpr: np.ndarray
    n_samples: int
    n_positives: int


def roc_curve(scores, labels) -> RocCurve:
    y, n_pos, n_neg = _validate_classes(labels)
    s = np.asarray(scores, dtype=float)
    order = np.argsort(-s, kind="mergesort")
    s_desc = s[order]
    y_desc = y[order]
    tp = np.cumsum(y_desc)
    fp = np.cumsum(~y_desc)
    # one point per distinct threshold (the last index of each tie group)
    keep = np.flatnonzero(np.r_[s_desc[1:] != s_desc[:-1], True])
    fpr = np.concatenate(([0.0], fp[keep] / n_neg, [1.0]))
    tpr = np.concatenate(([0.0], tp[keep] / n_pos, [1.0]))
    return RocCurve(fpr=fpr, tpr=tpr, n_samples=len(y), n_positives=n_pos)


_trapz = getattr(np, "trapezoid", None) or np.trapz


def trapezoid_area(curve: RocCurve) -> float:
    return float(_trapz(curve.tpr, curve.fpr))


@dataclass(frozen=True)
class RocBand:
    """Vertically averaged ROC with a confidence band across repetitions."""

    fpr_grid: np.ndarray
    tpr_mean: np.ndarray
    tpr_lower: np.ndarray
    tpr_upper: np.ndarray
    level: float


def _tpr_on_grid(curve: RocCurve, grid: np.ndarray) -> np.ndarray:
    # collapse vertical segments: keep the highest TPR at each distinct FPR
    keep = np.flatnonzero(np.r_[curve.fpr[1:] != curve.fpr[:-1], True])
    return np.interp(grid, curve.fpr[keep], curve.tpr[keep])


def roc_band(curves, level: float = 0.90) -> RocBand:
    """Mean TPR on a 0.01-step FPR grid, banded by z * sample SD across curves."""
    curves = list(curves)
    if not curves:
        raise ConfigError("roc_band needs at least one curve")
    grid = np.linspace(0.0, 1.0, 101)
    tprs = np.vstack([_tpr_on_grid(c, grid) for c in curves])
    mean = tprs.mean(axis=0)
    if len(curves) >= 2:
        sd = tprs.std(axis=0, ddof=1)
    else:
        sd = np.zeros_like(mean)
    z = 1.645 if level == 0.90 else NormalDist().inv_cdf(0.5 + level / 2.0)
    lower = np.clip(mean - z * sd, 0.0, 1.0)
    upper = np.clip(mean + z * sd, 0.0, 1.0)
    return RocBand(fpr_grid=grid, tpr_mean=mean, tpr_lower=lower, tpr_upper=upper,
                   level=level)


def select_lambda(X, y, grid=LAMBDA_GRID, n_folds: int = 3, seed: int = 0) -> float:
    """Inner-CV ridge strength selection by mean AUC; deterministic."""
    plan = make_folds(y, n_folds=n_folds, n_repeats=1, seed=seed, stratified=True)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    best_lam, best_score = None, -math.inf
    for lam in grid:
        fold_aucs = []
        for f in range(n_folds):
            tr = plan.train_indices(0, f)
            te = plan.test_indices(0, f)
            model = glm.fit(X[tr], y[tr], lam)
            try:
                fold_aucs.append(auc(glm.predict_proba(model, X[te]), y[te]))
            except UndefinedAucError:
                continue
        score = float(np.mean(fold_aucs)) if fold_aucs else -math.inf
        if score > best_score:
            best_lam, best_score = lam, score
    return float(best_lam if best_lam is not None else grid[0])


# -- experiment configuration -------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved sweep configuration; see README for the YAML schema."""

    seed: int = DEFAULT_SEED
    source: str = "synthetic"  # "synthetic" | "manifests"
    population: PopulationConfig | None = None
    manifests: tuple[str, ...] = ()
    manifest_dir: str | None = None
    folds: int = 5
    repeats: int = 5
    stratified: bool = True
    fold_unit: str = "sample"  # "sample" | "session"
    exclude_ongoing: bool = False
    tau_p: tuple[float, ...] = (60.0,)
    tau_f: tuple[float, ...] = (60.0,)
    subsets: tuple[FeatureSubset, ...] = (FeatureSubset.ALL,)
    schemes: tuple[SchemeKind, ...] = (SchemeKind.GLOBAL,)
    k_values: tuple[int, ...] = (0,)
    lam: float | str = 1.0  # a ridge strength, or "auto" for inner-CV selection
    rank_pool: str = "all"  # "all" | "biomarker"

    def __post_init__(self):
        if self.source not in ("synthetic", "manifests"):
            raise ConfigError(f"data source must be 'synthetic' or 'manifests', "
                              f"got {self.source!r}")
        if self.fold_unit not in ("sample", "session"):
            raise ConfigError(f"fold_unit must be 'sample' or 'session', got {self.fold_unit!r}")
        if self.rank_pool not in ("all", "biomarker"):
            raise ConfigError(f"rank_pool must be 'all' or 'biomarker', got {self.rank_pool!r}")
        if isinstance(self.lam, str) and self.lam != "auto":
            raise ConfigError(f"lambda must be a number or 'auto', got {self.lam!r}")
        if self.source == "synthetic" and self.population is None:
            object.__setattr__(self, "population", PopulationConfig(seed=self.seed))

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        doc = dict(doc or {})
        data = dict(doc.pop("data", {}) or {})
        cv = dict(doc.pop("cv", {}) or {})
        sweep = dict(doc.pop("sweep", {}) or {})
        seed = int(doc.pop("seed", DEFAULT_SEED))
        source = str(data.pop("source", "synthetic"))
        population = None
        if "population" in data:
            pop = dict(data.pop("population") or {})
            pop.setdefault("seed", seed)
            population = PopulationConfig.from_dict(pop)
        elif source == "synthetic":
            population = PopulationConfig(seed=seed)
        manifests = tuple(data.pop("manifests", ()) or ())
        manifest_dir = data.pop("manifest_dir", None)
        if data:
            raise ConfigError(f"unknown data config keys: {sorted(data)}")

        def _as_tuple(value, parse=float):
            if isinstance(value, (list, tuple)):
                return tuple(parse(v) for v in value)
            return (parse(value),)

        cfg = ExperimentConfig(
            seed=seed,
            source=source,
            population=population,
            manifests=manifests,
            manifest_dir=manifest_dir,
            folds=int(cv.pop("folds", 5)),
            repeats=int(cv.pop("repeats", 5)),
            stratified=bool(cv.pop("stratified", True)),
            fold_unit=str(cv.pop("fold_unit", "sample")),
            exclude_ongoing=bool(doc.pop("exclude_ongoing", False)),
            tau_p=_as_tuple(sweep.pop("tau_p", (60.0,))),
            tau_f=_as_tuple(sweep.pop("tau_f", (60.0,))),
            subsets=_as_tuple(sweep.pop("subsets", ("all",)), FeatureSubset.parse),
            schemes=_as_tuple(sweep.pop("schemes", ("global",)), SchemeKind.parse),
            k_values=_as_tuple(sweep.pop("k", (0,)), int),
            lam=doc.pop("lambda", 1.0),
            rank_pool=str(doc.pop("rank_pool", "all")),
        )
        if cv:
            raise ConfigError(f"unknown cv config keys: {sorted(cv)}")
        if sweep:
            raise ConfigError(f"unknown sweep config keys: {sorted(sweep)}")
        if doc:
            raise ConfigError(f"unknown config keys: {sorted(doc)}")
        return cfg

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "data": {
                "source": self.source,
                "population": self.population.to_dict() if self.population else None,
                "manifests": list(self.manifests),
                "manifest_dir": self.manifest_dir,
            },
            "cv": {"folds": self.folds, "repeats": self.repeats,
                   "stratified": self.stratified, "fold_unit": self.fold_unit},
            "sweep": {"tau_p": list(self.tau_p), "tau_f": list(self.tau_f),
                      "subsets": [s.value for s in self.subsets],
                      "schemes": [s.value for s in self.schemes],
                      "k": list(self.k_values)},
            "lambda": self.lam,
            "rank_pool": self.rank_pool,
            "exclude_ongoing": self.exclude_ongoing,
        }


# -- report data model --------------------------------------------------------

@dataclass(frozen=True)
class CellKey:
    scheme: SchemeKind
    subset: FeatureSubset
    tau_p: float
    tau_f: float
    k: int | None = None

    def slug(self) -> str:
        subset = self.subset.value.replace("+", "_")
        out = f"{self.scheme.value}_{subset}_tp{self.tau_p:g}_tf{self.tau_f:g}"
        if self.k is not None:
            out += f"_k{self.k}"
        return out

    def sort_key(self):
        return (self.scheme.value, self.subset.value, self.tau_p, self.tau_f,
                -1 if self.k is None else self.k)


@dataclass
class CellResult:
    """Everything measured for one configuration cell."""

    key: CellKey
    status: str = "ok"  # "ok" | "failed"
    error: str | None = None
    lam: float | str = 1.0
    n_samples: int = 0
    n_positives: int = 0
    n_participants: int = 0
    dimension: int = 0
    parameter_count: int = 0
    auc_mean: float | None = None
    auc_sd: float | None = None  # across repeats (global) / participants (otherwise)
    auc_min: float | None = None  # across repeats
    auc_max: float | None = None
    per_repeat_auc: list = field(default_factory=list)
    per_repeat_fold_auc: list | None = None  # global cells
    per_participant_auc: dict | None = None  # person-dependent / hybrid cells
    excluded_participants: list = field(default_factory=list)
    roc_per_repeat: list = field(default_factory=list)  # pooled test scores per repeat
    band: RocBand | None = None
    elapsed_seconds: float = 0.0


@dataclass
class EvaluationReport:
    config: dict
    seed: int
    cells: list
    timings: dict = field(default_factory=dict)

    def cell(self, scheme, subset, tau_p=60.0, tau_f=60.0, k=None) -> CellResult:
        scheme = SchemeKind.parse(scheme)
        subset = FeatureSubset.parse(subset)
        for c in self.cells:
            key = c.key
            if (key.scheme is scheme and key.subset is subset
                    and key.tau_p == tau_p and key.tau_f == tau_f and key.k == k):
                return c
        raise KeyError(f"no cell for {scheme.value}/{subset.value}/"
                       f"tp={tau_p}/tf={tau_f}/k={k}")

    @property
    def failed_cells(self) -> list:
        return [c for c in self.cells if c.status != "ok"]


# -- experiment runner --------------------------------------------------------

def _load_experiment_sessions(cfg: ExperimentConfig):
    if cfg.source == "synthetic":
        return generate_population(cfg.population)
    if cfg.manifest_dir:
        return load_sessions(cfg.manifest_dir)
    if cfg.manifests:
        return load_sessions(cfg.manifests)
    raise ConfigError("manifest data source needs 'manifests' or 'manifest_dir'")


def _cell_keys(cfg: ExperimentConfig):
    keys = []
    for scheme in cfg.schemes:
        for subset in cfg.subsets:
            for tp in cfg.tau_p:
                for tf in cfg.tau_f:
                    if scheme is SchemeKind.K_HYBRID:
                        keys.extend(CellKey(scheme, subset, tp, tf, k) for k in cfg.k_values)
                    else:
                        keys.append(CellKey(scheme, subset, tp, tf))
    return sorted(keys, key=CellKey.sort_key)


def run_experiment(config) -> EvaluationReport:
    """Evaluate every cell of the sweep; failures are recorded, not raised."""
    cfg = ExperimentConfig.from_dict(config) if isinstance(config, dict) else config
    t_start = time.perf_counter()
    sessions = _load_experiment_sessions(cfg)
    t_data = time.perf_counter()

    datasets: dict = {}
    plans: dict = {}
    pd_plans: dict = {}
    for tp in cfg.tau_p:
        for tf in cfg.tau_f:
            ds = extract_dataset(sessions, tp, tf, FeatureSubset.ALL,
                                 exclude_ongoing=cfg.exclude_ongoing)
            datasets[(tp, tf)] = ds
            groups = None
            if cfg.fold_unit == "session":
                groups = [f"{p}|{s}" for p, s in zip(ds.participant_ids, ds.session_ids)]
            plans[(tp, tf)] = make_folds(ds.y, cfg.folds, cfg.repeats, cfg.seed,
                                         cfg.stratified, groups=groups)
            pd_plans[(tp, tf)] = restrict_plan_for_participants(
                plans[(tp, tf)], ds.participant_ids, ds.y)
    t_extract = time.perf_counter()

    global_fit_cache: dict = {}
    cells = []
    for key in _cell_keys(cfg):
        t0 = time.perf_counter()
        try:
            cell = _evaluate_cell(cfg, key, datasets[(key.tau_p, key.tau_f)],
                                  plans[(key.tau_p, key.tau_f)],
                                  pd_plans[(key.tau_p, key.tau_f)],
                                  global_fit_cache)
        except AggonsetError as exc:
            cell = CellResult(key=key, status="failed", error=str(exc), lam=cfg.lam)
        cell.elapsed_seconds = time.perf_counter() - t0
        cells.append(cell)

    timings = {
        "load_or_generate_seconds": t_data - t_start,
        "extraction_seconds": t_extract - t_data,
        "total_seconds": time.perf_counter() - t_start,
    }
    return EvaluationReport(config=cfg.to_dict(), seed=cfg.seed, cells=cells,
                            timings=timings)


def _evaluate_cell(cfg: ExperimentConfig, key: CellKey, base: FeatureDataset,
                   plan: FoldPlan, pd_plan: FoldPlan, fit_cache: dict) -> CellResult:
    ds = base.project(key.subset)
    y = ds.y
    n = len(ds)
    participants = ds.participants
    d = ds.layout.d
    pooled_reporting = key.scheme is SchemeKind.GLOBAL
    plan_eff = plan if pooled_reporting else pd_plan
    plan_tag = "g" if pooled_reporting else "p"

    scores = np.full((cfg.repeats, n), np.nan)
    for r in range(cfg.repeats):
        for f in range(cfg.folds):
            train_idx = plan_eff.train_indices(r, f)
            test_idx = plan_eff.test_indices(r, f)
            train = ds.rows(train_idx)
            if cfg.lam == "auto":
                lam = select_lambda(train.X, train.y, seed=cfg.seed)
            else:
                lam = float(cfg.lam)
            spec = SchemeSpec(kind=key.scheme, tau_p=key.tau_p, tau_f=key.tau_f,
                              subset=key.subset, lam=lam,
                              k=key.k if key.scheme is SchemeKind.K_HYBRID else None)
            gmodel = None
            if key.scheme in (SchemeKind.GLOBAL, SchemeKind.K_HYBRID):
                ck = (key.tau_p, key.tau_f, key.subset.value, lam, plan_tag, r, f)
                gmodel = fit_cache.get(ck)
                if gmodel is None:
                    gmodel = glm.fit(train.X, train.y, lam,
                                     layout_fingerprint=ds.layout.fingerprint,
                                     trained_on={"scheme": key.scheme.value,
                                                 "repeat": r, "fold": f, "seed": cfg.seed})
                    fit_cache[ck] = gmodel
            scheme = train_scheme(spec, train, cfg.rank_pool,
                                  trained_on={"repeat": r, "fold": f, "seed": cfg.seed},
                                  global_model=gmodel)
            scores[r, test_idx] = scheme.predict_proba_batch(
                ds.X[test_idx], [ds.participant_ids[i] for i in test_idx])

    result = CellResult(
        key=key, lam=cfg.lam, n_samples=n, n_positives=int(y.sum()),
        n_participants=len(participants), dimension=d,
        parameter_count=parameter_count(key.scheme, d, len(participants), key.k),
    )
    pid_array = np.asarray(ds.participant_ids)
    per_repeat = []
    roc_list = []
    if pooled_reporting:
        fold_aucs = []
        for r in range(cfg.repeats):
            per_repeat.append(auc(scores[r], y))
            roc_list.append(roc_curve(scores[r], y))
            row = []
            for f in range(cfg.folds):
                te = plan_eff.test_indices(r, f)
                try:
                    row.append(auc(scores[r, te], y[te]))
                except UndefinedAucError:
                    row.append(None)
            fold_aucs.append(row)
        result.per_repeat_fold_auc = fold_aucs
        result.auc_sd = float(np.std(per_repeat, ddof=1)) if len(per_repeat) > 1 else 0.0
    else:
        per_pid: dict[str, list] = {p: [] for p in participants}
        excluded = set()
        for r in range(cfg.repeats):
            roc_list.append(roc_curve(scores[r], y))
            vals = []
            for pid in participants:
                rows = np.flatnonzero(pid_array == pid)
                try:
                    a = auc(scores[r, rows], y[rows])
                except UndefinedAucError:
                    excluded.add(pid)
                    continue
                per_pid[pid].append(a)
                vals.append(a)
            if not vals:
                raise UndefinedAucError("AUC undefined for every participant")
            per_repeat.append(float(np.mean(vals)))
        result.per_participant_auc = {
            p: float(np.mean(per_pid[p])) for p in participants if per_pid[p]
        }
        result.excluded_participants = sorted(excluded)
        means = list(result.per_participant_auc.values())
        result.auc_sd = float(np.std(means, ddof=1)) if len(means) > 1 else 0.0

    result.per_repeat_auc = [float(v) for v in per_repeat]
    result.auc_mean = float(np.mean(per_repeat))
    result.auc_min = float(np.min(per_repeat))
    result.auc_max = float(np.max(per_repeat))
    result.roc_per_repeat = roc_list
    result.band = roc_band(roc_list, 0.90)
    return result


# -- report (de)serialization -------------------------------------------------

def _curve_to_dict(c: RocCurve) -> dict:
    return {"fpr": [float(v) for v in c.fpr], "tpr": [float(v) for v in c.tpr],
            "n_samples": c.n_samples, "n_positives": c.n_positives}


def _band_to_dict(b: RocBand) -> dict:
    return {"fpr_grid": [float(v) for v in b.fpr_grid],
            "tpr_mean": [float(v) for v in b.tpr_mean],
            "tpr_lower": [float(v) for v in b.tpr_lower],
            "tpr_upper": [float(v) for v in b.tpr_upper],
            "level": b.level}


def report_to_dict(report: EvaluationReport) -> dict:
    """Serializable form of a report.

    Wall-clock measurements (cell ``elapsed_seconds``, report ``timings``) are
    deliberately left out: serialized reports are byte-deterministic functions
    of (config, seed).
    """
    cells = []
    for c in report.cells:
        cells.append({
            "scheme": c.key.scheme.value,
            "subset": c.key.subset.value,
            "tau_p": c.key.tau_p,
            "tau_f": c.key.tau_f,
            "k": c.key.k,
            "status": c.status,
            "error": c.error,
            "lambda": c.lam,
            "n_samples": c.n_samples,
            "n_positives": c.n_positives,
            "n_participants": c.n_participants,
            "dimension": c.dimension,
            "parameter_count": c.parameter_count,
            "auc_mean": c.auc_mean,
            "auc_sd": c.auc_sd,
            "auc_min": c.auc_min,
            "auc_max": c.auc_max,
            "per_repeat_auc": c.per_repeat_auc,
            "per_repeat_fold_auc": c.per_repeat_fold_auc,
            "per_participant_auc": c.per_participant_auc,
            "excluded_participants": c.excluded_participants,
            "roc_per_repeat": [_curve_to_dict(r) for r in c.roc_per_repeat],
            "band": _band_to_dict(c.band) if c.band else None,
        })
    return {"format": "aggonset-report-v1", "seed": report.seed,
            "config": report.config, "cells": cells}


def report_from_dict(doc: dict) -> EvaluationReport:
    if doc.get("format") != "aggonset-report-v1":
        raise ConfigError("not an aggonset-report-v1 document")
    cells = []
    for c in doc["cells"]:
        key = CellKey(SchemeKind.parse(c["scheme"]), FeatureSubset.parse(c["subset"]),
                      float(c["tau_p"]), float(c["tau_f"]),
                      None if c["k"] is None else int(c["k"]))
        band = None
        if c.get("band"):
            b = c["band"]
            band = RocBand(np.array(b["fpr_grid"]), np.array(b["tpr_mean"]),
                           np.array(b["tpr_lower"]), np.array(b["tpr_upper"]), b["level"])
        curves = [RocCurve(np.array(r["fpr"]), np.array(r["tpr"]),
                           r["n_samples"], r["n_positives"])
                  for r in c.get("roc_per_repeat", [])]
        cells.append(CellResult(
            key=key, status=c["status"], error=c.get("error"), lam=c.get("lambda", 1.0),
            n_samples=c["n_samples"], n_positives=c["n_positives"],
            n_participants=c["n_participants"], dimension=c["dimension"],
            parameter_count=c["parameter_count"], auc_mean=c["auc_mean"],
            auc_sd=c["auc_sd"], auc_min=c["auc_min"], auc_max=c["auc_max"],
            per_repeat_auc=c.get("per_repeat_auc", []),
            per_repeat_fold_auc=c.get("per_repeat_fold_auc"),
            per_participant_auc=c.get("per_participant_auc"),
            excluded_participants=c.get("excluded_participants", []),
            roc_per_repeat=curves, band=band,
        ))
    return EvaluationReport(config=doc["config"], seed=doc["seed"], cells=cells)
