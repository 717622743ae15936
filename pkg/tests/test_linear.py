import numpy as np
import pytest

from ngram_graph.linear import (
    DegenerateLabels,
    LinearModel,
    _objective_and_grad,
    compute_metric,
    evaluate,
    fit,
    mae,
    pr_auc,
    rmse,
    roc_auc,
)


class TestFit:
    def test_huge_lambda_shrinks_weights_to_intercept(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((60, 5))
        y = (rng.random(60) > 0.3).astype(float)
        model = fit(X, y, task="logistic", lam=1e6, penalty="squared-l2")
        assert np.linalg.norm(model.weights) <= 1e-4
        # every prediction collapses to the intercept
        p = model.predict(X)
        assert np.allclose(p, p[0])

    def test_separable_two_points(self):
        X = np.array([[1.0], [-1.0]])
        y = np.array([1.0, 0.0])
        model = fit(X, y, task="logistic", lam=1e-6)
        pred = (model.predict(X) > 0.5).astype(float)
        assert np.array_equal(pred, y)

    def test_least_squares_recovers_line(self):
        X = np.linspace(-1, 1, 50).reshape(-1, 1)
        y = 3.0 * X[:, 0] + 0.5
        model = fit(X, y, task="least-squares", lam=0.0)
        assert abs(model.weights[0] - 3.0) <= 1e-5
        assert abs(model.intercept - 0.5) <= 1e-5

    def test_logistic_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((20, 4))
        y = (rng.random(20) > 0.5).astype(float)
        theta = rng.standard_normal(5) * 0.3
        _, grad = _objective_and_grad(theta, X, y, "logistic", 0.01, "squared-l2")
        eps = 1e-6
        num = np.empty_like(theta)
        for i in range(theta.size):
            up, dn = theta.copy(), theta.copy()
            up[i] += eps
            dn[i] -= eps
            lu, _ = _objective_and_grad(up, X, y, "logistic", 0.01, "squared-l2")
            ld, _ = _objective_and_grad(dn, X, y, "logistic", 0.01, "squared-l2")
            num[i] = (lu - ld) / (2 * eps)
        assert np.linalg.norm(grad - num) / np.linalg.norm(num) <= 1e-5

    def test_unsquared_penalty_gradient_away_from_zero(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((20, 3))
        y = (rng.random(20) > 0.5).astype(float)
        theta = np.array([0.5, -0.2, 0.1, 0.0])
        _, grad = _objective_and_grad(theta, X, y, "logistic", 0.1, "unsquared-l2")
        eps = 1e-7
        num = np.empty_like(theta)
        for i in range(theta.size):
            up, dn = theta.copy(), theta.copy()
            up[i] += eps
            dn[i] -= eps
            lu, _ = _objective_and_grad(up, X, y, "logistic", 0.1, "unsquared-l2")
            ld, _ = _objective_and_grad(dn, X, y, "logistic", 0.1, "unsquared-l2")
            num[i] = (lu - ld) / (2 * eps)
        assert np.linalg.norm(grad - num) / np.linalg.norm(num) <= 1e-5

    def test_objective_nonincreasing(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((40, 6))
        y = (rng.random(40) > 0.5).astype(float)
        model = fit(X, y, lam=1e-3, max_iter=200)
        trace = model.report.objective_trace
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_single_class_faults(self):
        X = np.ones((5, 2))
        with pytest.raises(DegenerateLabels):
            fit(X, np.ones(5), task="logistic")

    def test_non_binary_labels_rejected(self):
        X = np.ones((4, 2))
        with pytest.raises(ValueError):
            fit(X, np.array([0.0, 1.0, 2.0, 1.0]), task="logistic")

    def test_nan_features_rejected(self):
        X = np.ones((4, 2))
        X[1, 0] = np.nan
        with pytest.raises(ValueError):
            fit(X, np.array([0, 1, 0, 1.0]))

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((30, 4))
        y = (rng.random(30) > 0.4).astype(float)
        a = fit(X, y, lam=1e-3)
        b = fit(X, y, lam=1e-3)
        assert np.array_equal(a.weights, b.weights)

    def test_model_json_round_trip(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((30, 4))
        y = (rng.random(30) > 0.4).astype(float)
        model = fit(X, y, lam=1e-2)
        back = LinearModel.from_json(model.to_json())
        assert np.array_equal(back.weights, model.weights)
        assert back.intercept == model.intercept
        assert np.array_equal(back.decision(X), model.decision(X))


class TestMetrics:
    def test_perfect_ranking(self):
        assert roc_auc([1, 0], [0.9, 0.1]) == 1.0

    def test_inverted_ranking(self):
        assert roc_auc([1, 0], [0.1, 0.9]) == 0.0

    def test_ties_give_half_credit(self):
        assert roc_auc([1, 0], [0.5, 0.5]) == 0.5

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(6)
        n = 10_000
        y = (rng.random(n) > 0.5).astype(float)
        s = rng.random(n)
        assert abs(roc_auc(y, s) - 0.5) <= 0.02

    def test_single_class_auc_absent(self):
        assert roc_auc([1, 1], [0.2, 0.3]) is None
        assert pr_auc([0, 0], [0.2, 0.3]) is None

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(7)
        y = (rng.random(200) > 0.4).astype(float)
        s = rng.standard_normal(200)
        a = roc_auc(y, s)
        b = roc_auc(y, np.exp(2.0 * s) + 5.0)
        assert abs(a - b) <= 1e-12

    def test_pr_auc_perfect(self):
        assert pr_auc([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1]) == 1.0

    def test_pr_auc_matches_average_precision_by_hand(self):
        # scores order labels as 1,0,1,0: AP = 1/2 (1 + 2/3) = 0.8333...
        val = pr_auc([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.1])
        assert abs(val - (0.5 * (1.0 + 2.0 / 3.0))) <= 1e-12

    def test_rmse_mae(self):
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))
        assert mae([0.0, 0.0], [3.0, -4.0]) == pytest.approx(3.5)

    def test_compute_metric_dispatch(self):
        assert compute_metric("RMSE", [0.0], [1.0]) == 1.0
        with pytest.raises(ValueError):
            compute_metric("accuracy", [0], [1])

    def test_evaluate_uses_decision_scores(self):
        X = np.array([[1.0], [-1.0]])
        y = np.array([1.0, 0.0])
        model = fit(X, y, lam=1e-6)
        assert evaluate(model, X, y, "roc-auc") == 1.0
