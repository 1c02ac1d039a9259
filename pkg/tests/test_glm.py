import math

import numpy as np
import pytest

from aggonset import glm
from aggonset.errors import ConfigError, DataError, FitConvergenceError
from aggonset.glm import FitOptions, fit, load_model, objective_and_gradient, predict_proba, save_model


def random_problem(rng, n=40, d=7, informative=True):
    X = rng.normal(0.0, 1.0, (n, d))
    if informative:
        w = rng.normal(0.0, 1.0, d)
        y = (X @ w + 0.5 * rng.normal(size=n)) > 0
    else:
        y = rng.random(n) > 0.6
    if y.all() or not y.any():
        y[0] = ~y[0]
    return X, y


class TestObjectiveAndGradient:
    def test_value_at_zero_is_n_log2(self, rng):
        X, y = random_problem(rng, n=30, d=5)
        value, _ = objective_and_gradient(np.zeros(5), 0.0, X, y, 1.0)
        assert value == pytest.approx(30 * math.log(2), rel=1e-12)

    def test_ridge_gradient_term_exact(self):
        w = np.array([0.5, -2.0, 3.25])
        X = np.zeros((4, 3))
        y = np.array([True, False, True, False])
        lam = 2.5
        _, grad = objective_and_gradient(w, 0.0, X, y, lam)
        assert np.array_equal(grad[1:], lam * w)

    def test_gradient_against_central_differences(self, rng):
        for _ in range(25):
            X, y = random_problem(rng, n=20, d=7)
            w = rng.normal(0.0, 0.5, 7)
            b = float(rng.normal())
            offset = rng.normal(0.0, 0.3, 20)
            _, grad = objective_and_gradient(w, b, X, y, 1.3, offset=offset)
            step = 1e-5
            fd = np.empty(8)
            for j in range(8):
                def value_at(delta, j=j):
                    wj = w.copy()
                    bj = b
                    if j == 0:
                        bj += delta
                    else:
                        wj[j - 1] += delta
                    v, _ = objective_and_gradient(wj, bj, X, y, 1.3, offset=offset)
                    return v
                fd[j] = (value_at(step) - value_at(-step)) / (2 * step)
            rel = np.abs(grad - fd) / np.maximum(1.0, np.abs(fd))
            assert rel.max() <= 1e-4


class TestFit:
    def test_single_class_all_negative(self, rng):
        X = rng.normal(size=(12, 4))
        model = fit(X, np.zeros(12, dtype=bool), 1.0)
        assert np.all(model.weights == 0.0)
        assert predict_proba(model, X[0]) == pytest.approx(1e-6, rel=1e-6)

    def test_single_class_all_positive(self, rng):
        X = rng.normal(size=(12, 4))
        model = fit(X, np.ones(12, dtype=bool), 1.0)
        assert predict_proba(model, X[0]) == pytest.approx(1 - 1e-6, rel=1e-9)

    def test_separable_one_dimensional(self):
        X = np.linspace(-2, 2, 20).reshape(-1, 1)
        y = X.ravel() > 0
        model = fit(X, y, 1.0)
        assert model.weights[0] > 0
        probs = predict_proba(model, X)
        assert np.all(np.diff(probs) > 0)

    def test_huge_lambda_gives_intercept_only_limit(self, rng):
        X = rng.normal(size=(40, 6))
        y = np.array([True] * 24 + [False] * 16)
        model = fit(X, y, 1e6)
        assert np.linalg.norm(model.weights) <= 1e-3
        assert model.intercept == pytest.approx(math.log(24 / 16), abs=1e-3)

    def test_gradient_norm_at_solution(self, rng):
        for _ in range(10):
            X, y = random_problem(rng, n=35, d=9)
            model = fit(X, y, 0.7)
            Xs = model.standardizer.transform(X)
            _, grad = objective_and_gradient(model.weights, model.intercept, Xs, y, 0.7)
            assert np.max(np.abs(grad)) <= 1e-8

    def test_objective_not_worse_than_zero_start(self, rng):
        X, y = random_problem(rng, n=30, d=6)
        model = fit(X, y, 2.0)
        Xs = model.standardizer.transform(X)
        v_fit, _ = objective_and_gradient(model.weights, model.intercept, Xs, y, 2.0)
        v_zero, _ = objective_and_gradient(np.zeros(6), 0.0, Xs, y, 2.0)
        assert v_fit <= v_zero

    def test_shrinkage_monotonicity(self, rng):
        X, y = random_problem(rng, n=50, d=8)
        norms = [np.linalg.norm(fit(X, y, lam).weights)
                 for lam in (0.01, 0.1, 1.0, 10.0, 100.0)]
        assert all(a >= b - 1e-9 for a, b in zip(norms, norms[1:]))

    def test_determinism(self, rng):
        X, y = random_problem(rng)
        a = fit(X, y, 1.0)
        b = fit(X, y, 1.0)
        assert np.array_equal(a.weights, b.weights) and a.intercept == b.intercept

    def test_duplicated_data_equals_half_lambda(self, rng):
        # doubling every sample doubles the likelihood term only, so the
        # duplicated fit is exactly the original problem at half the ridge
        X, y = random_problem(rng, n=30, d=5)
        dup = fit(np.vstack([X, X]), np.concatenate([y, y]), 1.0)
        half = fit(X, y, 0.5)
        assert np.allclose(dup.weights, half.weights, atol=1e-10)
        assert dup.intercept == pytest.approx(half.intercept, abs=1e-10)

    def test_duplicated_data_keeps_decision_ranking(self):
        # the duplicated objective is exactly twice the half-lambda objective,
        # so the minimizer (and with it every prediction and ranking) matches
        rng = np.random.default_rng(5)
        X = rng.normal(0.0, 1.0, (40, 5))
        y = X @ np.array([2.0, -1.0, 0.5, 0.0, 1.5]) > 0
        dup = fit(np.vstack([X, X]), np.concatenate([y, y]), 1.0)
        equivalent = fit(X, y, 0.5)
        p_dup = predict_proba(dup, X)
        p_eq = predict_proba(equivalent, X)
        assert np.allclose(p_dup, p_eq, atol=1e-10)
        assert list(np.argsort(p_dup)) == list(np.argsort(p_eq))

    def test_ranking_invariant_to_affine_feature_rescaling(self, rng):
        X, y = random_problem(rng, n=40, d=6)
        X2 = X.copy()
        X2[:, 2] = -3.5 * X2[:, 2] + 11.0
        p1 = predict_proba(fit(X, y, 1.0), X)
        p2 = predict_proba(fit(X2, y, 1.0), X2)
        assert np.allclose(p1, p2, atol=1e-9)

    def test_constant_column_standardization(self, rng):
        X = rng.normal(size=(25, 3))
        X[:, 1] = 4.2
        y = X[:, 0] > 0
        model = fit(X, y, 1.0)
        assert model.standardizer.scale[1] == 1.0
        assert np.all(np.isfinite(model.weights))

    def test_offset_shifts_the_problem(self, rng):
        X, y = random_problem(rng, n=30, d=4)
        offset = np.full(30, 0.8)
        m = fit(X, y, 1.0, FitOptions(offset=offset))
        # predicting with the same offset recovers a well-calibrated model;
        # the intercept absorbs the shift relative to the no-offset fit
        m0 = fit(X, y, 1.0)
        z = m.intercept + 0.8
        assert z == pytest.approx(m0.intercept, abs=1e-6)

    def test_free_mask_zeroes_frozen_weights(self, rng):
        X, y = random_problem(rng, n=30, d=5)
        mask = np.array([True, False, True, False, True])
        m = fit(X, y, 1.0, FitOptions(free_mask=mask))
        assert np.all(m.weights[~mask] == 0.0)
        assert np.any(m.weights[mask] != 0.0)

    def test_non_finite_input_rejected(self):
        X = np.array([[1.0, np.inf], [0.0, 1.0]])
        with pytest.raises(DataError):
            fit(X, [True, False], 1.0)

    def test_negative_lambda_rejected(self, rng):
        X, y = random_problem(rng)
        with pytest.raises(ConfigError):
            fit(X, y, -1.0)

    def test_non_convergence_is_explicit(self, rng):
        X, y = random_problem(rng, n=40, d=6)
        with pytest.raises(FitConvergenceError) as exc:
            fit(X, y, 1.0, FitOptions(max_iter=1, tol=1e-14))
        assert exc.value.gradient_norm > 0


class TestPredictProba:
    def test_zero_model_gives_half(self, rng):
        X = rng.normal(size=(10, 3))
        model = glm.RidgeLogisticModel(
            weights=np.zeros(3), intercept=0.0, lam=1.0,
            standardizer=glm.Standardizer.fit(X))
        assert predict_proba(model, X[0]) == 0.5

    def test_intercept_log3_gives_three_quarters(self, rng):
        X = rng.normal(size=(10, 3))
        model = glm.RidgeLogisticModel(
            weights=np.zeros(3), intercept=math.log(3.0), lam=1.0,
            standardizer=glm.Standardizer.fit(X))
        assert predict_proba(model, X[0]) == pytest.approx(0.75, rel=1e-12)

    def test_sigmoid_mirror_symmetry(self, rng):
        X, y = random_problem(rng, n=30, d=4)
        m = fit(X, y, 1.0)
        zero_b = glm.RidgeLogisticModel(weights=m.weights, intercept=0.0, lam=m.lam,
                                        standardizer=m.standardizer)
        x = X[3]
        mirror = m.standardizer.mean - (x - m.standardizer.mean)
        assert predict_proba(zero_b, x) + predict_proba(zero_b, mirror) == \
               pytest.approx(1.0, abs=1e-12)

    def test_layout_mismatch_rejected(self, rng):
        X, y = random_problem(rng, n=20, d=4)
        m = fit(X, y, 1.0)
        with pytest.raises(Exception):
            predict_proba(m, np.zeros(5))

    def test_monotone_in_feature_with_weight_sign(self, rng):
        X, y = random_problem(rng, n=60, d=3)
        m = fit(X, y, 1.0)
        x = X[0].copy()
        for j in range(3):
            lo, hi = x.copy(), x.copy()
            lo[j] -= 1.0
            hi[j] += 1.0
            direction = math.copysign(1.0, m.weights[j])
            assert (predict_proba(m, hi) - predict_proba(m, lo)) * direction >= 0


class TestSerialization:
    def test_round_trip_full_precision(self, rng, tmp_path):
        X, y = random_problem(rng, n=30, d=6)
        m = fit(X, y, math.pi, layout_fingerprint="abc123",
                trained_on={"scheme": "global", "fold": 3})
        path = tmp_path / "model.json"
        save_model(m, path)
        back = load_model(path)
        assert np.array_equal(back.weights, m.weights)
        assert back.intercept == m.intercept
        assert back.lam == m.lam
        assert np.array_equal(back.standardizer.mean, m.standardizer.mean)
        assert np.array_equal(back.standardizer.scale, m.standardizer.scale)
        assert back.layout_fingerprint == "abc123"
        assert back.trained_on == {"scheme": "global", "fold": 3}
