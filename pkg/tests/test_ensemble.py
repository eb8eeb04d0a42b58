"""Forest and boosting behavior."""

import math

import numpy as np
import pytest

from slm import data, ensemble as ens, projection as pj, tree as tr


def _tree_params(**kw):
    proj = {
        k: kw.pop(k)
        for k in ("d0", "p", "r", "alpha", "a_int", "beta", "q_max", "theta_minimax", "exhaustive_limit")
        if k in kw
    }
    return tr.TreeParams(projection=pj.ProjectionParams(**proj), **kw)


def _leaf_tree(value=None, histogram=None, n_features=2, task="regression", k=None):
    leaf = tr.LeafNode(depth=0, n_samples=3, value=value,
                       histogram=None if histogram is None else np.array(histogram))
    params = tr.TreeParams(loss_kind="mse" if task == "regression" else "entropy")
    return tr.SLMTree(root=leaf, d0_dims=np.arange(n_features), task=task,
                      n_features=n_features, params=params, n_classes=k)


def _moons(n=150, seed=21):
    ds = data.gen_moons(2, n, 0.3, seed=seed)
    return data.train_test_split(ds, data.SplitSpec(0.6, seed=1))


# ---------------------------------------------------------------------------
# forest
# ---------------------------------------------------------------------------

def test_forest_single_tree_equals_tree():
    train, test = _moons()
    tp = _tree_params(a_int=3.0, alpha=0.3, r=2, q_max=2, max_depth=4, min_samples=6)
    forest = ens.fit_forest(train, ens.ForestParams(n_trees=1, tree=tp, seed=3))
    single = tr.build_tree(train, tp, np.random.default_rng(np.random.SeedSequence(3).spawn(1)[0]))
    fl, fp = ens.predict_forest(forest, test.features)
    sl, sp = tr.predict(single, test.features)
    assert np.array_equal(fl, sl)


def test_forest_deterministic_and_seed_sensitive():
    train, _ = _moons()
    tp = _tree_params(a_int=6.0, alpha=0.3, r=2, q_max=2, p=12, exhaustive_limit=0,
                      max_depth=4, min_samples=6)
    f1 = ens.fit_forest(train, ens.ForestParams(n_trees=4, tree=tp, seed=3))
    f2 = ens.fit_forest(train, ens.ForestParams(n_trees=4, tree=tp, seed=3))
    f3 = ens.fit_forest(train, ens.ForestParams(n_trees=4, tree=tp, seed=4))
    x = np.random.default_rng(0).normal(size=(100, 2))
    l1, p1 = ens.predict_forest(f1, x)
    l2, p2 = ens.predict_forest(f2, x)
    l3, p3 = ens.predict_forest(f3, x)
    assert np.array_equal(l1, l2) and np.array_equal(p1, p2)
    assert not np.array_equal(p1, p3)


def test_forest_training_accuracy_at_least_best_single_tree():
    rng = np.random.default_rng(5)
    centers = np.array([[0, 0], [3, 0], [0, 3]], dtype=float)
    x = np.vstack([rng.normal(c, 0.7, size=(60, 2)) for c in centers])
    y = np.repeat([0, 1, 2], 60)
    ds = data.Dataset(features=x, target=y, task="classification", n_classes=3)
    tp = _tree_params(a_int=6.0, alpha=0.3, r=2, q_max=2, p=10, exhaustive_limit=0,
                      max_depth=4, min_samples=6)
    forest = ens.fit_forest(ds, ens.ForestParams(n_trees=7, tree=tp, seed=9))
    fl, _ = ens.predict_forest(forest, x)
    forest_acc = np.mean(fl == y)
    tree_accs = []
    for t in forest.trees:
        tl, _ = tr.predict(t, x)
        tree_accs.append(np.mean(tl == y))
    assert forest_acc >= max(tree_accs) - 0.02


def test_forest_vote_shares():
    trees = tuple(
        _leaf_tree(histogram=h, task="classification", k=2)
        for h in ([5, 1], [4, 1], [1, 9])
    )
    model = ens.EnsembleModel(kind=ens.FOREST, task="classification", n_features=2,
                              trees=trees, n_classes=2)
    label, probs = ens.predict_forest(model, np.zeros(2))
    assert label == 0
    assert np.allclose(probs, [2 / 3, 1 / 3])


def test_forest_identical_trees_reduce_to_tree():
    t = _leaf_tree(histogram=[2, 7], task="classification", k=2)
    model = ens.EnsembleModel(kind=ens.FOREST, task="classification", n_features=2,
                              trees=(t, t, t), n_classes=2)
    label, probs = ens.predict_forest(model, np.zeros(2))
    assert label == 1 and np.allclose(probs, [0, 1])


def test_forest_regression_mean():
    trees = tuple(_leaf_tree(value=v) for v in (1.0, 2.0, 3.0))
    model = ens.EnsembleModel(kind=ens.FOREST, task="regression", n_features=2, trees=trees)
    assert ens.predict_forest(model, np.zeros(2)) == 2.0


def test_forest_permutation_invariance():
    train, test = _moons()
    tp = _tree_params(a_int=6.0, alpha=0.3, r=2, q_max=2, p=10, exhaustive_limit=0,
                      max_depth=4, min_samples=6)
    forest = ens.fit_forest(train, ens.ForestParams(n_trees=5, tree=tp, seed=13))
    shuffled = ens.EnsembleModel(
        kind=forest.kind, task=forest.task, n_features=forest.n_features,
        trees=tuple(forest.trees[i] for i in [3, 0, 4, 2, 1]),
        n_classes=forest.n_classes, seed=forest.seed,
    )
    l1, p1 = ens.predict_forest(forest, test.features)
    l2, p2 = ens.predict_forest(shuffled, test.features)
    assert np.array_equal(l1, l2) and np.array_equal(p1, p2)

    # regression: means must match exactly as well
    rds = data.gen_friedman(1, 200, 10, seed=1)
    rtp = _tree_params(d0=5, a_int=3.0, alpha=0.3, r=2, q_max=1, p=10,
                       exhaustive_limit=0, max_depth=3, min_samples=8,
                       loss_kind="mse")
    rf = ens.fit_forest(rds, ens.ForestParams(n_trees=5, tree=rtp, seed=2))
    rf_shuffled = ens.EnsembleModel(
        kind=rf.kind, task=rf.task, n_features=rf.n_features,
        trees=tuple(rf.trees[i] for i in [4, 2, 0, 1, 3]),
    )
    v1 = ens.predict_forest(rf, rds.features)
    v2 = ens.predict_forest(rf_shuffled, rds.features)
    assert np.array_equal(v1, v2)


def test_forest_curve_consistent_with_predict():
    train, test = _moons()
    tp = _tree_params(a_int=6.0, alpha=0.3, r=2, q_max=2, p=10, exhaustive_limit=0,
                      max_depth=4, min_samples=6)
    forest = ens.fit_forest(train, ens.ForestParams(n_trees=6, tree=tp, seed=13))
    curve = ens.forest_curve(forest, test.features, test.target)
    labels, _ = ens.predict_forest(forest, test.features)
    assert curve.values[-1] == pytest.approx(float(np.mean(labels == test.target)), abs=0)
    assert len(curve.values) == 6


# ---------------------------------------------------------------------------
# boosting gradients (finite-difference check)
# ---------------------------------------------------------------------------

def _central_diff(f, z, eps=1e-4):
    # Richardson-extrapolated central difference, O(eps^4) truncation
    wide = (f(z + eps) - f(z - eps)) / (2 * eps)
    tight = (f(z + eps / 2) - f(z - eps / 2)) / eps
    return (4 * tight - wide) / 3


def _central_diff2(f, z, eps=1e-1):
    # two Richardson levels over the plain second difference keep the
    # curvature estimate within 1e-6 relative even where it is tiny
    def d2(e):
        return (f(z + e) - 2 * f(z) + f(z - e)) / (e * e)

    a, b, c = d2(eps), d2(eps / 2), d2(eps / 4)
    ab = (4 * b - a) / 3
    bc = (4 * c - b) / 3
    return (16 * bc - ab) / 15


def test_squared_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(31)
    for _ in range(100):
        score = float(rng.normal(scale=3))
        y = float(rng.normal(scale=3))
        g, h = ens.squared_gradients(np.array([score]), np.array([y]))
        f = lambda z: float(ens.squared_loss(np.array([z]), np.array([y]))[0])
        assert g[0] == pytest.approx(_central_diff(f, score), rel=1e-6, abs=1e-9)
        assert h[0] == pytest.approx(_central_diff2(f, score), rel=1e-6, abs=1e-9)


def test_logloss_gradients_match_finite_differences():
    rng = np.random.default_rng(32)
    for _ in range(100):
        score = float(rng.normal(scale=2))
        y = float(rng.integers(0, 2))
        g, h = ens.logloss_gradients(np.array([score]), np.array([y]))
        f = lambda z: float(ens.logloss(np.array([z]), np.array([y]))[0])
        assert g[0] == pytest.approx(_central_diff(f, score), rel=1e-6, abs=1e-9)
        assert h[0] == pytest.approx(_central_diff2(f, score), rel=1e-6, abs=1e-9)


def test_gradient_values_at_reference_points():
    g, h = ens.squared_gradients(np.array([0.0]), np.array([3.0]))
    assert g[0] == -3.0 and h[0] == 1.0
    g, h = ens.logloss_gradients(np.array([0.0]), np.array([1.0]))
    assert g[0] == pytest.approx(-0.5, rel=1e-12)
    assert h[0] == pytest.approx(0.25, rel=1e-12)


def test_softmax_gradients_reduce_to_probabilities():
    scores = np.zeros((4, 3))
    onehot = np.eye(3)[[0, 1, 2, 0]]
    g, h = ens.softmax_gradients(scores, onehot)
    assert np.allclose(g, 1 / 3 - onehot)
    assert np.allclose(h, (1 / 3) * (2 / 3))


# ---------------------------------------------------------------------------
# boosting
# ---------------------------------------------------------------------------

def test_boost_one_round_constant_target_exact():
    rng = np.random.default_rng(41)
    x = rng.normal(size=(40, 2))
    y = np.full(40, 7.25)
    ds = data.Dataset(features=x, target=y, task="regression")
    params = ens.BoostParams(
        n_rounds=1, learning_rate=1.0,
        tree=_tree_params(a_int=1.8, alpha=0.2, r=2, max_depth=1, min_samples=2),
        seed=0,
    )
    model, curve = ens.fit_boost(ds, params)
    assert np.allclose(ens.predict_boost(model, x), 7.25)
    assert curve.values[0] == pytest.approx(0.0, abs=1e-24)


def test_boost_forces_gain_loss():
    params = ens.BoostParams(tree=_tree_params(loss_kind="mse"))
    assert params.tree.loss_kind == "xgb_gain"


def test_boost_additivity_regression():
    ds = data.gen_friedman(1, 200, 10, seed=3)
    params = ens.BoostParams(
        n_rounds=8, learning_rate=0.4, base_score=2.0,
        tree=_tree_params(d0=5, a_int=2.0, alpha=0.3, r=2, q_max=1, max_depth=3, min_samples=8),
        seed=5,
    )
    model, _ = ens.fit_boost(ds, params)
    x = ds.features[:50]
    expected = model.base_score + model.learning_rate * np.sum(
        np.stack([tr.predict(t, x) for t in model.trees]), axis=0
    )
    assert np.array_equal(ens.predict_boost(model, x), expected)


def test_boost_one_round_equals_single_gradient_tree():
    ds = data.gen_friedman(1, 150, 10, seed=4)
    tp = _tree_params(d0=5, a_int=2.0, alpha=0.3, r=2, q_max=1, max_depth=3, min_samples=8)
    params = ens.BoostParams(n_rounds=1, learning_rate=1.0, base_score=0.0, tree=tp, seed=6)
    model, _ = ens.fit_boost(ds, params)
    rng = np.random.default_rng(np.random.SeedSequence(6).spawn(1)[0])
    g, h = ens.squared_gradients(np.zeros(ds.n_samples), ds.target)
    single = tr.build_gradient_tree(ds.features, g, h, 0.0, params.tree, rng)
    assert np.array_equal(ens.predict_boost(model, ds.features), tr.predict(single, ds.features))


def test_boost_training_loss_descends_regression():
    rng = np.random.default_rng(51)
    for trial in range(3):
        x = rng.normal(size=(120, 3))
        y = x[:, 0] * 2 + np.sin(x[:, 1]) + rng.normal(scale=0.3, size=120)
        ds = data.Dataset(features=x, target=y, task="regression")
        params = ens.BoostParams(
            n_rounds=12, learning_rate=1.0, lam=0.0,
            tree=_tree_params(a_int=2.0, alpha=0.3, r=2, q_max=1, max_depth=3, min_samples=6),
            seed=trial,
        )
        _, curve = ens.fit_boost(ds, params)
        diffs = np.diff(curve.values)
        assert np.all(diffs <= 1e-12)


def test_boost_training_logloss_descends_classification():
    train, _ = _moons(n=120, seed=61)
    params = ens.BoostParams(
        n_rounds=25, learning_rate=0.3,
        tree=_tree_params(a_int=3.0, alpha=0.3, r=2, q_max=1, max_depth=3, min_samples=8),
        seed=2,
    )
    _, curve = ens.fit_boost(train, params)
    diffs = np.diff(curve.values)
    assert np.all(diffs <= 1e-9)


def test_boost_multiclass_probabilities_sum_to_one():
    ds = data.gen_moons(4, 60, 0.2, seed=71)
    params = ens.BoostParams(
        n_rounds=5, learning_rate=0.3,
        tree=_tree_params(a_int=3.0, alpha=0.3, r=2, q_max=1, max_depth=3, min_samples=8),
        seed=3,
    )
    model, curve = ens.fit_boost(ds, params)
    labels, probs = ens.predict_boost(model, ds.features)
    assert np.all(np.abs(probs.sum(axis=1) - 1.0) < 1e-12)
    assert len(model.trees) == 5 * 4
    assert curve.metric == "logloss"


def test_boost_zero_rounds_prediction():
    model = ens.EnsembleModel(kind=ens.BOOST, task="regression", n_features=2,
                              trees=(), base_score=1.5, learning_rate=0.1)
    assert ens.predict_boost(model, np.zeros((3, 2))).tolist() == [1.5, 1.5, 1.5]
    cls = ens.EnsembleModel(kind=ens.BOOST, task="classification", n_features=2,
                            trees=(), n_classes=2, learning_rate=0.1)
    labels, probs = ens.predict_boost(cls, np.zeros((2, 2)))
    assert np.allclose(probs, 0.5)


def test_boost_scaled_single_tree():
    t = _leaf_tree(value=4.0)
    model = ens.EnsembleModel(kind=ens.BOOST, task="regression", n_features=2,
                              trees=(t,), learning_rate=0.5, base_score=2.0)
    assert ens.predict_boost(model, np.zeros(2)) == 4.0


def test_boost_sigmoid_monotone_in_score():
    t = _leaf_tree(value=3.0)
    model = ens.EnsembleModel(kind=ens.BOOST, task="classification", n_features=2,
                              trees=(t,), n_classes=2, learning_rate=1.0)
    _, probs_one = ens.predict_boost(model, np.zeros(2))
    big = ens.EnsembleModel(kind=ens.BOOST, task="classification", n_features=2,
                            trees=(t, t, t), n_classes=2, learning_rate=1.0)
    _, probs_three = ens.predict_boost(big, np.zeros(2))
    assert probs_three[1] > probs_one[1] > 0.5


def test_boost_curve_matches_staged_evaluation():
    train, _ = _moons(n=100, seed=81)
    params = ens.BoostParams(
        n_rounds=6, learning_rate=0.3,
        tree=_tree_params(a_int=3.0, alpha=0.3, r=2, q_max=1, max_depth=3, min_samples=8),
        seed=4,
    )
    model, fit_curve = ens.fit_boost(train, params)
    staged = ens.boost_curve(model, train.features, train.target)
    assert np.allclose(fit_curve.values, staged.values, rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------------------
# learning-curve export
# ---------------------------------------------------------------------------

def test_export_learning_curve_rows(tmp_path):
    curve = ens.LearningCurve(metric="logloss", values=(0.6, 0.5, 0.4, 0.35, 0.33))
    path = tmp_path / "curve.csv"
    ens.export_learning_curve(curve, path, comment="config: {}")
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("# config:")
    assert lines[1] == "index,train_logloss"
    assert len(lines) == 2 + 5


def test_export_learning_curve_with_holdout(tmp_path):
    curve = ens.LearningCurve(metric="mse", values=(2.0, 1.0))
    holdout = ens.LearningCurve(metric="mse", values=(2.5, 1.5))
    path = tmp_path / "curve.csv"
    ens.export_learning_curve(curve, path, holdout=holdout)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,train_mse,holdout_mse"
    assert lines[1] == "1,2.0,2.5"
