import numpy as np
import pytest

from oracles import qp_dual_by_enumeration

from drcgenre.svm import (
    BinarySvmModel,
    ConvergenceWarning,
    StandardizationStats,
    TrainedOvoModel,
    auto_gamma,
    decision_function,
    dual_objective,
    fit_binary,
    load_model,
    ovo_scores,
    predict_binary,
    predict_ovo,
    rbf_gram,
    rbf_kernel,
    save_model,
    solve_dual,
    standardize,
    train_ovo,
)


def blobs(k=3, n=20, dim=2, spread=0.3, seed=0):
    rng = np.random.default_rng(seed)
    ang = 2 * np.pi * np.arange(k) / k
    centres = np.zeros((k, dim))
    centres[:, 0], centres[:, 1] = 3 * np.cos(ang), 3 * np.sin(ang)
    X = np.vstack([c + spread * rng.standard_normal((n, dim)) for c in centres])
    y = np.repeat([f"c{i}" for i in range(k)], n)
    return X, list(y)


def random_instance(rng):
    n = int(rng.integers(2, 9))
    X = rng.standard_normal((n, 3))
    t = rng.choice([-1.0, 1.0], n)
    t[0], t[1] = 1.0, -1.0
    return rbf_gram(X, X, rng.uniform(0.1, 2.0)), t, float(rng.choice([0.1, 1.0, 10.0]))


def test_standardize():
    z, stats = standardize([[0.0], [2.0]])
    np.testing.assert_array_equal(z.ravel(), [-1.0, 1.0])
    assert stats.mean[0] == 1.0 and stats.std[0] == 1.0

    rng = np.random.default_rng(0)
    z, stats = standardize(rng.normal(5, 3, (50, 4)))
    z2, _ = standardize(z)
    np.testing.assert_allclose(z2, z, atol=1e-9)

    z, stats = standardize([[1.0, 3.0], [2.0, 3.0], [4.0, 3.0]])
    assert np.all(z[:, 1] == 0.0) and stats.std[1] > 0

    with pytest.raises(ValueError):
        standardize([[1.0, 2.0]])


def test_rbf_kernel():
    x = np.array([0.3, -1.2])
    assert rbf_kernel(x, x, 0.7) == 1.0
    assert rbf_kernel([0.0, 0.0], [1.0, 0.0], 1.0) == pytest.approx(0.36787944117144233, rel=1e-15)
    rng = np.random.default_rng(4)
    for _ in range(20):
        a, b = rng.standard_normal(5), rng.standard_normal(5)
        assert rbf_kernel(a, b, 0.3) == rbf_kernel(b, a, 0.3)
    with pytest.raises(ValueError):
        rbf_kernel([1.0], [1.0, 2.0], 1.0)


def test_gram_symmetric_unit_diagonal():
    X = np.random.default_rng(5).standard_normal((10, 4))
    K = rbf_gram(X, X, 0.5)
    np.testing.assert_allclose(K, K.T, atol=1e-15)
    np.testing.assert_allclose(np.diag(K), 1.0)


def test_two_point_closed_form():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    K = rbf_gram(X, X, 0.5)
    alpha, b = solve_dual(K, [1.0, -1.0], C=1e6)
    expected = 2.0 / (K[0, 0] - 2 * K[0, 1] + K[1, 1])
    np.testing.assert_allclose(alpha, [expected, expected], rtol=1e-9)
    assert b == pytest.approx(0.0, abs=1e-9)
    # grid-search oracle along the feasible line a1 = a2
    grid = np.linspace(0, 2 * expected, 20001)
    best = grid[np.argmax([dual_objective([a, a], K, [1, -1]) for a in grid])]
    assert alpha[0] == pytest.approx(best, rel=1e-3)


def test_duplicate_opposite_labels_hit_box():
    K = np.ones((2, 2))
    alpha, _ = solve_dual(K, [1.0, -1.0], C=2.5)
    np.testing.assert_array_equal(alpha, [2.5, 2.5])
    val, a = qp_dual_by_enumeration(K, [1.0, -1.0], 2.5)
    np.testing.assert_allclose(a, [2.5, 2.5])


def test_solver_matches_enumeration_oracle():
    rng = np.random.default_rng(11)
    for _ in range(30):
        K, t, C = random_instance(rng)
        alpha, _ = solve_dual(K, t, C)
        best, _ = qp_dual_by_enumeration(K, t, C)
        assert dual_objective(alpha, K, t) == pytest.approx(best, abs=1e-6)
        assert abs(alpha @ t) < 1e-8
        assert np.all(alpha >= 0) and np.all(alpha <= C + 1e-9)


def test_kkt_complementarity():
    X, y = blobs(2, 30, spread=1.2, seed=3)
    t = np.where(np.array(y) == "c0", 1.0, -1.0)
    K = rbf_gram(X, X, 0.5)
    C = 1.0
    alpha, b = solve_dual(K, t, C)
    margin = t * ((alpha * t) @ K + b)
    tol = 1e-3
    assert np.all(margin[alpha == 0] >= 1 - tol)
    free = (alpha > 0) & (alpha < C)
    assert free.any()
    np.testing.assert_allclose(margin[free], 1.0, atol=tol)
    assert np.all(margin[alpha == C] <= 1 + tol)


def test_solver_errors():
    with pytest.raises(ValueError):
        solve_dual(np.eye(3), [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        solve_dual(np.array([[1.0, 0.5], [0.1, 1.0]]), [1.0, -1.0])
    with pytest.raises(ValueError):
        solve_dual(np.eye(2), [1.0, 0.0])


def test_iteration_cap_warns():
    X, y = blobs(2, 30, spread=1.5, seed=1)
    t = np.where(np.array(y) == "c0", 1.0, -1.0)
    with pytest.warns(ConvergenceWarning):
        alpha, _ = solve_dual(rbf_gram(X, X, 1.0), t, C=1.0, max_iter=3)
    assert abs(alpha @ t) < 1e-12


def test_binary_prediction_and_ties():
    X = np.array([[-1.0, 0.0], [1.0, 0.0]])
    model = fit_binary(X, [1.0, -1.0], gamma=0.5, C=1e6)
    score, label = predict_binary(model, [0.0, 0.0])
    assert score == pytest.approx(0.0, abs=1e-12)
    for x, t in zip(X, (1, -1)):
        s, lab = predict_binary(model, x)
        assert lab == t and t * s >= 1 - 1e-3
    with pytest.raises(ValueError):
        predict_binary(model, [0.0, 0.0, 0.0])


def test_zero_score_maps_to_positive():
    model = BinarySvmModel(np.zeros((0, 1)), np.zeros(0), 0.0, 1.0)
    assert predict_binary(model, [3.0]) == (0.0, 1)


def test_separable_training_accuracy():
    X, y = blobs(2, 25, spread=0.3, seed=2)
    t = np.where(np.array(y) == "c0", 1.0, -1.0)
    model = fit_binary(X, t, gamma=0.5, C=1e4)
    assert np.all(np.sign(decision_function(model, X)) == t)


def test_relabel_negates_scores():
    X, y = blobs(2, 15, spread=1.0, seed=6)
    t = np.where(np.array(y) == "c0", 1.0, -1.0)
    probe = np.random.default_rng(0).standard_normal((10, 2))
    a = decision_function(fit_binary(X, t, 0.5, 1.0), probe)
    b = decision_function(fit_binary(X, -t, 0.5, 1.0), probe)
    np.testing.assert_allclose(b, -a, atol=1e-12)


def test_ovo_model_counts():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 3))
    labels = [f"g{i % 10}" for i in range(40)]
    assert len(train_ovo(X, labels).pairwise_models) == 45
    assert len(train_ovo(X[:10], labels[:10][:2] * 5).pairwise_models) == 1
    with pytest.raises(ValueError):
        train_ovo(X[:5], ["a"] * 5)


def test_ovo_binary_agrees_with_single_model():
    X, y = blobs(2, 20, spread=1.0, seed=8)
    model = train_ovo(X, y, gamma=0.5)
    (m,) = model.pairwise_models.values()
    probe = np.random.default_rng(1).normal(1.5, 2.0, (30, 2))
    scores = decision_function(m, model.stats.apply(probe))
    expected = [model.class_labels[0] if s >= 0 else model.class_labels[1] for s in scores]
    assert predict_ovo(model, probe) == expected


def test_three_blobs():
    X, y = blobs(3, 20, seed=1)
    model = train_ovo(X, y, gamma="auto", C=1.0)
    assert len(model.pairwise_models) == 3
    assert np.mean(np.array(predict_ovo(model, X)) == np.array(y)) >= 0.95
    votes_label = predict_ovo(model, np.array([3.0, 0.0]))
    assert votes_label == "c0"


def _constant_ovo(pair_scores, labels=("a", "b", "c")):
    # pairwise models with no support vectors score every point as their bias
    models = {pair: BinarySvmModel(np.zeros((0, 2)), np.zeros(0), score, 1.0)
              for pair, score in pair_scores.items()}
    stats = StandardizationStats(np.zeros(2), np.ones(2))
    return TrainedOvoModel(labels, models, stats, 1.0, 1.0)


def test_vote_tie_resolved_by_score():
    # a beats b, b beats c, c beats a: one vote each
    model = _constant_ovo({(0, 1): 0.5, (1, 2): 2.0, (0, 2): -1.0})
    votes, strength = ovo_scores(model, np.zeros(2))
    np.testing.assert_array_equal(votes, [[1, 1, 1]])
    np.testing.assert_array_equal(strength, [[0.5, 2.0, 1.0]])
    assert all(predict_ovo(model, np.zeros(2)) == "b" for _ in range(3))


def test_vote_tie_then_label_order():
    model = _constant_ovo({(0, 1): 1.0, (1, 2): 1.0, (0, 2): -1.0})
    assert predict_ovo(model, np.zeros(2)) == "a"


def test_permutation_invariance():
    X, y = blobs(3, 15, spread=0.8, seed=4)
    perm = np.random.default_rng(9).permutation(len(y))
    a = train_ovo(X, y, gamma=0.5)
    b = train_ovo(X[perm], [y[i] for i in perm], gamma=0.5)
    probe = np.random.default_rng(2).normal(1.0, 2.0, (50, 2))
    assert predict_ovo(a, probe) == predict_ovo(b, probe)


def test_auto_gamma_after_standardization():
    z, _ = standardize(np.random.default_rng(0).standard_normal((30, 21)))
    assert auto_gamma(z) == pytest.approx(1 / 21)


def test_model_round_trip(tmp_path):
    X, y = blobs(3, 10, seed=5)
    model = train_ovo(X, y)
    save_model(model, tmp_path / "m.svm")
    loaded = load_model(tmp_path / "m.svm")
    assert loaded.class_labels == model.class_labels
    probe = np.random.default_rng(3).normal(1, 2, (20, 2))
    assert predict_ovo(loaded, probe) == predict_ovo(model, probe)
    for key, m in model.pairwise_models.items():
        np.testing.assert_array_equal(decision_function(loaded.pairwise_models[key], probe),
                                      decision_function(m, probe))
    (tmp_path / "bad.svm").write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load_model(tmp_path / "bad.svm")


def test_bias_without_free_multipliers_satisfies_kkt():
    rng = np.random.default_rng(5)
    seen = 0
    for _ in range(200):
        K, t, C = random_instance(rng)
        alpha, b = solve_dual(K, t, C)
        if np.any((alpha > 0) & (alpha < C)):
            continue
        seen += 1
        m = t * ((alpha * t) @ K + b)
        assert np.all(m[alpha == 0] >= 1 - 1e-9)
        assert np.all(m[alpha == C] <= 1 + 1e-9)
    assert seen > 0
