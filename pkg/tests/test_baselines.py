import numpy as np
import pytest

from laserlife.baselines import (
    ForestConfig,
    GbmConfig,
    TreeNode,
    fit_gbm,
    fit_random_forest,
    fit_tree,
    load_model,
    predict_tree,
    save_model,
)
from laserlife.datagen import build_dataset, sample_conditions


def brute_force_stump(X, y, min_leaf=1):
    """Enumerate every (feature, midpoint) split and return the minimal SSE."""
    best = np.inf
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for a, b in zip(vals[:-1], vals[1:]):
            thr = 0.5 * (a + b)
            left, right = y[X[:, j] <= thr], y[X[:, j] > thr]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
            best = min(best, sse)
    return best


def leaf_sse(node, X, y):
    pred = predict_tree(node, X)
    return float(((pred - y) ** 2).sum())


@pytest.fixture(scope="module")
def pipeline():
    ds = build_dataset(sample_conditions(400, seed=21))
    return ds.subset(slice(0, 300)), ds.subset(slice(300, 400))


class TestTree:
    def test_single_row(self):
        node = fit_tree([[1.0, 2.0]], [5.0])
        assert node.is_leaf and node.value == 5.0

    def test_constant_targets(self):
        X = np.random.default_rng(0).normal(size=(30, 3))
        node = fit_tree(X, np.full(30, 2.5), max_depth=5)
        assert node.is_leaf and node.value == 2.5

    def test_hand_stump(self):
        node = fit_tree([[1.0], [2.0], [3.0], [4.0]], [0.0, 0.0, 1.0, 1.0], max_depth=1)
        assert node.feature == 0 and node.threshold == 2.5
        assert node.left.value == 0.0 and node.right.value == 1.0

    @pytest.mark.parametrize("seed", range(8))
    def test_stump_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 6, size=(25, 3)).astype(float)
        y = rng.normal(size=25)
        for min_leaf in (1, 3):
            node = fit_tree(X, y, max_depth=1, min_samples_leaf=min_leaf)
            assert leaf_sse(node, X, y) == pytest.approx(brute_force_stump(X, y, min_leaf), rel=1e-10)

    def test_leaf_is_mean_of_routed_targets(self):
        rng = np.random.default_rng(4)
        X, y = rng.normal(size=(60, 2)), rng.normal(size=60)
        node = fit_tree(X, y, max_depth=3)

        def check(n, idx):
            if n.is_leaf:
                assert n.value == pytest.approx(y[idx].mean(), rel=1e-12)
                assert n.n_samples == idx.size
                return
            m = X[idx, n.feature] <= n.threshold
            check(n.left, idx[m])
            check(n.right, idx[~m])

        check(node, np.arange(60))
        assert node.depth() <= 3

    def test_min_samples_leaf(self):
        rng = np.random.default_rng(5)
        X, y = rng.normal(size=(50, 2)), rng.normal(size=50)
        node = fit_tree(X, y, min_samples_leaf=7)

        def leaves(n):
            return [n] if n.is_leaf else leaves(n.left) + leaves(n.right)

        assert all(leaf.n_samples >= 7 for leaf in leaves(node))

    def test_piecewise_constant(self):
        rng = np.random.default_rng(6)
        X, y = rng.uniform(size=(100, 2)), rng.normal(size=100)
        node = fit_tree(X, y, max_depth=4)
        base = predict_tree(node, X)
        # tiny perturbations that cross no threshold leave predictions unchanged
        thresholds = []

        def walk(n):
            if not n.is_leaf:
                thresholds.append((n.feature, n.threshold))
                walk(n.left)
                walk(n.right)

        walk(node)
        gap = min(np.abs(X[:, f] - t).min() for f, t in thresholds)
        jitter = rng.uniform(-0.5, 0.5, size=X.shape) * gap
        np.testing.assert_array_equal(predict_tree(node, X + jitter), base)

    def test_dict_round_trip(self):
        rng = np.random.default_rng(8)
        X, y = rng.normal(size=(40, 3)), rng.normal(size=40)
        node = fit_tree(X, y, max_depth=4)
        back = TreeNode.from_dict(node.to_dict())
        np.testing.assert_array_equal(predict_tree(back, X), predict_tree(node, X))


class TestForest:
    def test_degenerate_forest_is_tree(self, pipeline):
        train, test = pipeline
        cfg = ForestConfig(n_trees=1, bootstrap=False, features_per_split=None, max_depth=6)
        rf = fit_random_forest(train, cfg, normalize=False)
        tree = fit_tree(train.features, train.targets, max_depth=6)
        np.testing.assert_array_equal(rf.predict(test), predict_tree(tree, test.features))

    def test_constant_targets(self, pipeline):
        train, test = pipeline
        train = train.subset(slice(None))
        train.values[:, -1] = 7.0
        rf = fit_random_forest(train, ForestConfig(n_trees=5))
        np.testing.assert_array_equal(rf.predict(test), 7.0)

    def test_mean_within_tree_envelope(self, pipeline):
        train, test = pipeline
        rf = fit_random_forest(train, ForestConfig(n_trees=10, seed=3))
        per_tree = rf.tree_predictions(test)
        pred = rf.predict(test)
        assert np.all(pred >= per_tree.min(axis=0) - 1e-12)
        assert np.all(pred <= per_tree.max(axis=0) + 1e-12)

    def test_deterministic_and_seed_sensitive(self, pipeline):
        train, test = pipeline
        a = fit_random_forest(train, ForestConfig(n_trees=5, seed=1)).predict(test)
        b = fit_random_forest(train, ForestConfig(n_trees=5, seed=1)).predict(test)
        c = fit_random_forest(train, ForestConfig(n_trees=5, seed=2)).predict(test)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_tree_k_independent_of_forest_size(self, pipeline):
        train, test = pipeline
        small = fit_random_forest(train, ForestConfig(n_trees=3, seed=4))
        big = fit_random_forest(train, ForestConfig(n_trees=6, seed=4))
        np.testing.assert_array_equal(small.tree_predictions(test), big.tree_predictions(test)[:3])

    def test_learns_something(self, pipeline):
        train, test = pipeline
        rf = fit_random_forest(train, ForestConfig(n_trees=20))
        mse = np.mean((rf.predict(test) - test.targets) ** 2)
        assert np.isfinite(mse) and mse < test.targets.var()

    def test_save_load(self, pipeline, tmp_path):
        train, test = pipeline
        rf = fit_random_forest(train, ForestConfig(n_trees=4))
        save_model(rf, tmp_path / "rf.json")
        np.testing.assert_array_equal(load_model(tmp_path / "rf.json").predict(test), rf.predict(test))


class TestGbm:
    def test_zero_rounds_is_mean(self, pipeline):
        train, test = pipeline
        gbm = fit_gbm(train, GbmConfig(n_rounds=0))
        np.testing.assert_allclose(gbm.predict(test), train.targets.mean(), rtol=1e-14)

    def test_full_tree_memorizes(self, pipeline):
        train, _ = pipeline
        gbm = fit_gbm(train, GbmConfig(n_rounds=1, learning_rate=1.0, max_depth=None))
        resid = gbm.predict(train) - train.targets
        assert np.max(np.abs(resid)) < 1e-9 * np.abs(train.targets).max()

    @pytest.mark.parametrize("lr", [0.05, 0.5, 1.0])
    def test_training_mse_non_increasing(self, pipeline, lr):
        train, _ = pipeline
        gbm = fit_gbm(train, GbmConfig(n_rounds=30, learning_rate=lr, max_depth=2))
        mses = [np.mean((f - train.targets) ** 2) for f in gbm.staged_predict(train)]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(mses, mses[1:]))

    def test_deterministic(self, pipeline):
        train, test = pipeline
        cfg = GbmConfig(n_rounds=10, subsample=0.7, seed=5)
        np.testing.assert_array_equal(fit_gbm(train, cfg).predict(test), fit_gbm(train, cfg).predict(test))

    def test_bad_learning_rate(self, pipeline):
        with pytest.raises(ValueError):
            fit_gbm(pipeline[0], GbmConfig(learning_rate=1.5))

    def test_save_load(self, pipeline, tmp_path):
        train, test = pipeline
        gbm = fit_gbm(train, GbmConfig(n_rounds=5))
        save_model(gbm, tmp_path / "g.json")
        np.testing.assert_array_equal(load_model(tmp_path / "g.json").predict(test), gbm.predict(test))
