import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzrank.classifiers import (
    VAR_SMOOTHING,
    DecisionTree,
    RandomForestModel,
    accuracy,
    build_tree,
    fit,
    nb_fit,
    nb_predict,
    predict,
    rf_fit,
    rf_predict,
)
from fuzzrank.dataset import kfold_split

from conftest import make_dataset


def blobs(n_per_class=5, spread=0.0, seed=0):
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.normal(0, 1, n_per_class), rng.normal(10, 1, n_per_class)]) if spread else None
    if x is None:
        x = np.array([0.0] * n_per_class + [10.0] * n_per_class)
    return make_dataset(x, [0] * n_per_class + [1] * n_per_class)


def stump(predicts):
    """A one-leaf tree predicting ``predicts`` everywhere."""
    counts = np.array([[1, 0]] if predicts == 0 else [[0, 1]])
    return DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), counts)


class TestNaiveBayes:
    def test_direct_estimates(self):
        model = nb_fit(blobs(), [0])
        np.testing.assert_array_equal(model.means[:, 0], [0.0, 10.0])
        np.testing.assert_allclose(np.exp(model.log_priors), [0.5, 0.5])

    def test_prior_only(self):
        ds = make_dataset(np.arange(10.0), [0] * 7 + [1] * 3)
        model = nb_fit(ds, [])
        assert accuracy(model, ds) == pytest.approx(0.7)
        ds = make_dataset(np.arange(10.0), [1] * 7 + [0] * 3)
        assert list(nb_predict(nb_fit(ds, []), np.zeros((2, 0)))) == [1, 1]

    def test_single_sample_class(self):
        ds = make_dataset([0.0, 1.0, 2.0, 9.0], [0, 0, 0, 1])
        model = nb_fit(ds, [0])
        largest = np.var([0.0, 1.0, 2.0, 9.0])
        assert model.variances[1, 0] == VAR_SMOOTHING * largest
        assert list(nb_predict(model, np.array([[9.0], [1.0]]))) == [1, 0]

    def test_decision_rule(self):
        model = nb_fit(blobs(50, spread=1.0, seed=1), [0])
        assert nb_predict(model, np.array([[model.means[0, 0]]]))[0] == 0
        assert nb_predict(model, np.array([[model.means[1, 0]]]))[0] == 1
        assert nb_predict(model, np.array([[2.0]]))[0] == 0

    def test_tie_goes_to_class_zero(self):
        ds = make_dataset([-1.0, 1.0, 3.0, 5.0], [0, 0, 1, 1])
        assert nb_predict(nb_fit(ds, [0]), np.array([[2.0]]))[0] == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            nb_predict(nb_fit(blobs(), [0]), np.zeros((3, 2)))

    def test_feature_order_invariant(self, random_dataset):
        ds = random_dataset(n_samples=60, n_features=4, seed=3)
        a = nb_fit(ds, [0, 1, 2, 3])
        b = nb_fit(ds, [3, 1, 0, 2])
        assert np.array_equal(nb_predict(a, ds.features), nb_predict(b, ds.features[:, [3, 1, 0, 2]]))


class TestRandomForest:
    def test_separable_training_accuracy(self):
        ds = blobs(20, spread=1.0, seed=4)
        assert accuracy(rf_fit(ds, [0], n_trees=10, seed=0), ds) == 1.0

    def test_deterministic(self, random_dataset):
        ds = random_dataset(n_samples=50, n_features=5, seed=1)
        a = rf_predict(rf_fit(ds, [0, 2, 4], 15, seed=7), ds.features[:, [0, 2, 4]])
        b = rf_predict(rf_fit(ds, [0, 2, 4], 15, seed=7), ds.features[:, [0, 2, 4]])
        np.testing.assert_array_equal(a, b)

    def test_random_labels_near_majority_rate(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(200, 3))
        y = (rng.random(200) < 0.3).astype(int)
        ds = make_dataset(X, y)
        accs = []
        for train, test in kfold_split(ds, 5, 0):
            model = rf_fit(ds.take(train), [0, 1, 2], n_trees=25, seed=0)
            accs.append(accuracy(model, ds.take(test)))
        majority = max(np.mean(y), 1 - np.mean(y))
        assert abs(np.mean(accs) - majority) <= 0.1

    def test_tree_count(self):
        assert rf_fit(blobs(), [0], n_trees=7).n_trees == 7
        with pytest.raises(ValueError):
            rf_fit(blobs(), [0], n_trees=0)

    def test_votes(self):
        X = np.zeros((3, 1))
        agree = RandomForestModel((0,), (stump(1), stump(1), stump(1)), 0)
        assert list(rf_predict(agree, X)) == [1, 1, 1]
        split = RandomForestModel((0,), (stump(1), stump(0)), 1)
        assert list(rf_predict(split, X)) == [0, 0, 0]

    def test_single_tree_forest(self, random_dataset):
        ds = random_dataset(n_samples=40, n_features=3, seed=6)
        model = rf_fit(ds, [0, 1, 2], n_trees=1, seed=3)
        np.testing.assert_array_equal(rf_predict(model, ds.features), model.trees[0].predict(ds.features))

    def test_tree_pure_leaves(self, random_dataset):
        ds = random_dataset(n_samples=40, n_features=3, seed=2)
        tree = build_tree(ds.features, ds.labels, 2, np.random.default_rng(0))
        leaves = tree.counts[tree.feature < 0]
        # distinct continuous rows can always be separated
        assert np.all((leaves[:, 0] == 0) | (leaves[:, 1] == 0))
        np.testing.assert_array_equal(tree.predict(ds.features), ds.labels)

    def test_empty_subset_predicts_majority(self):
        ds = make_dataset(np.arange(10.0), [0] * 3 + [1] * 7)
        assert accuracy(rf_fit(ds, []), ds) == pytest.approx(0.7)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            rf_predict(rf_fit(blobs(), [0], 3), np.zeros((2, 3)))


class TestShared:
    @pytest.mark.parametrize("kind", ["nb", "rf"])
    def test_perfect_feature(self, kind):
        labels = [0, 1] * 10
        ds = make_dataset(np.column_stack([labels, np.arange(20.0)]), labels)
        assert accuracy(fit(kind, ds, [0], n_trees=5), ds) == 1.0

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["nb", "rf"]))
    def test_row_order_invariant_predictions(self, seed, kind):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(30, 3))
        y = np.array([0, 1] * 15)
        model = fit(kind, make_dataset(X, y), [0, 1, 2], n_trees=5, seed=1)
        test = rng.normal(size=(12, 3))
        perm = rng.permutation(12)
        np.testing.assert_array_equal(predict(model, test)[perm], predict(model, test[perm]))
