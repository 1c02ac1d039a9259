"""Ridge-regularized binary logistic regression.

Deterministic fitting: feature standardization from training statistics, then
a damped Newton minimization of ``sum NLL + (lambda/2)*||w||^2`` over the free
weights and the (never penalized) intercept. Supports a fixed per-sample
offset in the linear predictor and a free-feature mask; both realize the
hybrid training scheme.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, FitConvergenceError, LayoutMismatchError

#: Degenerate single-class fits clip the class rate into this range before
#: taking log-odds (intercept magnitude <= ~13.8155).
PROB_CLIP = 1e-6


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class Standardizer:
    """Per-feature training mean and scale; constant columns get scale 1."""

    mean: np.ndarray
    scale: np.ndarray

    @staticmethod
    def fit(X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)  # population convention
        # rounding leaves constant columns with a std of a few ulps, so judge
        # constancy relative to the column magnitude
        constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
        scale = np.where(constant, 1.0, std)
        return Standardizer(mean=mean, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


@dataclass(frozen=True)
class FitOptions:
    """Optimizer controls plus the offset/mask mechanism for partial fits."""

    tol: float = 1e-8
    max_iter: int = 500
    offset: np.ndarray | None = None  # per-sample additive term in the linear predictor
    free_mask: np.ndarray | None = None  # False entries stay at weight 0


@dataclass(frozen=True)
class RidgeLogisticModel:
    """Immutable fitted model; weights live in standardized feature space."""

    weights: np.ndarray
    intercept: float
    lam: float
    standardizer: Standardizer
    layout_fingerprint: str = ""
    trained_on: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.weights)


def objective_and_gradient(weights, intercept, X, y, lam, offset=None):
    """Exact ridge-logistic objective and its analytic gradient.

    Returns ``(value, gradient)`` with the gradient laid out as
    ``[d/d_intercept, d/d_w_0, ..., d/d_w_{d-1}]``. ``X`` is used as given
    (no standardization here); ``offset`` adds per-sample terms to the
    linear predictor. The intercept is never penalized.
    """
    w = np.asarray(weights, dtype=float)
    X = np.asarray(X, dtype=float)
    yv = np.asarray(y, dtype=float)
    if X.shape[1] != w.shape[0]:
        raise LayoutMismatchError(f"X has {X.shape[1]} columns, weights have {w.shape[0]}")
    if X.shape[0] != yv.shape[0]:
        raise DataError("X and y disagree on sample count")
    value, grad, _ = _value_grad_prob(w, float(intercept), X, yv, float(lam), offset)
    return value, grad


def _value_grad_prob(w, b, X, yv, lam, offset):
    z = b + X @ w
    if offset is not None:
        z = z + offset
    # sum log(1 + e^z) - y*z, evaluated stably
    value = float(np.sum(np.logaddexp(0.0, z) - yv * z) + 0.5 * lam * float(w @ w))
    p = sigmoid(z)
    r = p - yv
    grad = np.concatenate(([r.sum()], X.T @ r + lam * w))
    return value, grad, p


def _degenerate_intercept(y: np.ndarray) -> float:
    rate = min(max(float(np.mean(y)), PROB_CLIP), 1.0 - PROB_CLIP)
    return math.log(rate / (1.0 - rate))


def fit_intercept_only(X, y, lam, *, layout_fingerprint="", trained_on=None) -> RidgeLogisticModel:
    """Zero-weight model whose intercept is the clipped log-odds of the class rate."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    return RidgeLogisticModel(
        weights=np.zeros(X.shape[1]),
        intercept=_degenerate_intercept(y),
        lam=float(lam),
        standardizer=Standardizer.fit(X),
        layout_fingerprint=layout_fingerprint,
        trained_on=dict(trained_on or {}),
    )


def fit(X, y, lam=1.0, options: FitOptions | None = None, *,
        layout_fingerprint: str = "", trained_on: dict | None = None) -> RidgeLogisticModel:
    """Fit the ridge-logistic model deterministically.

    Columns are standardized by training mean/std (population convention;
    constant columns are centered with divisor 1). Single-class targets yield
    the intercept-only degenerate model. Raises
    :class:`~aggonset.errors.FitConvergenceError` if the gradient inf-norm
    does not reach the tolerance within ``max_iter`` Newton steps.
    """
    opts = options or FitOptions()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=bool).ravel()
    n, d = X.shape
    if n < 1:
        raise DataError("fit needs at least one sample")
    if y.shape[0] != n:
        raise DataError("X and y disagree on sample count")
    if not np.all(np.isfinite(X)):
        raise DataError("X contains non-finite values")
    if lam < 0:
        raise ConfigError("lambda must be >= 0")
    if opts.offset is not None and len(opts.offset) != n:
        raise DataError("offset length must match sample count")
    if opts.free_mask is not None and len(opts.free_mask) != d:
        raise DataError("free_mask length must match feature count")

    meta = dict(trained_on or {})
    if y.all() or not y.any():
        return fit_intercept_only(X, y, lam, layout_fingerprint=layout_fingerprint,
                                  trained_on=meta)

    standardizer = Standardizer.fit(X)
    Xs = standardizer.transform(X)
    free = (np.asarray(opts.free_mask, dtype=bool) if opts.free_mask is not None
            else np.ones(d, dtype=bool))
    offset = None if opts.offset is None else np.asarray(opts.offset, dtype=float)

    b, w_free = _newton(Xs[:, free], y.astype(float), float(lam), offset,
                        opts.tol, opts.max_iter)
    weights = np.zeros(d)
    weights[free] = w_free
    return RidgeLogisticModel(
        weights=weights,
        intercept=b,
        lam=float(lam),
        standardizer=standardizer,
        layout_fingerprint=layout_fingerprint,
        trained_on=meta,
    )


def _newton(Z, yv, lam, offset, tol, max_iter):
    """Damped Newton on the strictly convex reduced problem."""
    n, m = Z.shape
    b = 0.0
    w = np.zeros(m)
    value, grad, p = _value_grad_prob(w, b, Z, yv, lam, offset)
    for _ in range(max_iter):
        gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
        if gnorm <= tol:
            return b, w
        s = p * (1.0 - p)
        H = np.empty((m + 1, m + 1))
        H[0, 0] = s.sum()
        zs = Z.T @ s
        H[0, 1:] = zs
        H[1:, 0] = zs
        H[1:, 1:] = (Z * s[:, None]).T @ Z + lam * np.eye(m)
        step = _solve_descent(H, grad)
        # Armijo backtracking; the full Newton step is almost always accepted.
        # The slack term keeps the search from stalling once true decreases
        # fall below float64 resolution of the objective value.
        slope = float(grad @ step)
        slack = 1e-12 * (1.0 + abs(value))
        alpha = 1.0
        for _ in range(60):
            b_try = b + alpha * step[0]
            w_try = w + alpha * step[1:]
            v_try, g_try, p_try = _value_grad_prob(w_try, b_try, Z, yv, lam, offset)
            if v_try <= value + 1e-4 * alpha * slope + slack:
                break
            alpha *= 0.5
        b, w, value, grad, p = b_try, w_try, v_try, g_try, p_try
    gnorm = float(np.max(np.abs(grad)))
    if gnorm <= tol:
        return b, w
    raise FitConvergenceError(gradient_norm=gnorm, iterations=max_iter)


def _solve_descent(H, grad):
    """Newton direction, with diagonal damping if H is numerically singular."""
    damping = 0.0
    eye = np.eye(H.shape[0])
    for _ in range(40):
        try:
            step = np.linalg.solve(H + damping * eye, -grad)
        except np.linalg.LinAlgError:
            step = None
        if step is not None and float(grad @ step) < 0:
            return step
        damping = max(damping * 10.0, 1e-10)
    # fall back to steepest descent
    return -grad


def decision_function(model: RidgeLogisticModel, x, offset=None):
    """Linear predictor ``intercept + w . standardize(x)`` (+ offset)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    X = np.atleast_2d(arr)
    if X.shape[1] != model.d:
        raise LayoutMismatchError(f"expected {model.d} features, got {X.shape[1]}")
    z = model.intercept + model.standardizer.transform(X) @ model.weights
    if offset is not None:
        z = z + np.asarray(offset, dtype=float)
    return float(z[0]) if single else z


def predict_proba(model: RidgeLogisticModel, x, offset=None):
    """Probability of the positive class; strictly inside (0, 1)."""
    z = decision_function(model, x, offset)
    if np.isscalar(z) or np.ndim(z) == 0:
        return float(sigmoid(np.array([z]))[0])
    return sigmoid(z)


# -- serialization ---------------------------------------------------------
# JSON with Python float repr: shortest representation that round-trips to
# the exact same double.

_MODEL_FORMAT = "aggonset-model-v1"


def model_to_dict(model: RidgeLogisticModel) -> dict:
    return {
        "format": _MODEL_FORMAT,
        "layout_fingerprint": model.layout_fingerprint,
        "lambda": model.lam,
        "intercept": model.intercept,
        "weights": [float(v) for v in model.weights],
        "standardizer": {
            "mean": [float(v) for v in model.standardizer.mean],
            "scale": [float(v) for v in model.standardizer.scale],
        },
        "trained_on": model.trained_on,
    }


def model_from_dict(doc: dict) -> RidgeLogisticModel:
    if doc.get("format") != _MODEL_FORMAT:
        raise DataError(f"not a {_MODEL_FORMAT} document")
    return RidgeLogisticModel(
        weights=np.array(doc["weights"], dtype=float),
        intercept=float(doc["intercept"]),
        lam=float(doc["lambda"]),
        standardizer=Standardizer(
            mean=np.array(doc["standardizer"]["mean"], dtype=float),
            scale=np.array(doc["standardizer"]["scale"], dtype=float),
        ),
        layout_fingerprint=doc.get("layout_fingerprint", ""),
        trained_on=dict(doc.get("trained_on", {})),
    )


def save_model(model: RidgeLogisticModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> RidgeLogisticModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
