import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import docs_to_matrix, planted_docs, sv
from vngender import classical as cl
from vngender import featurize as fz
from vngender.errors import PredictionError, TrainingError


def tree_instance(seed, max_rows=10, max_features=4):
    rng = np.random.default_rng(seed)
    n_rows = int(rng.integers(2, max_rows + 1))
    n_features = int(rng.integers(1, max_features + 1))
    docs = []
    for _ in range(n_rows):
        doc = {}
        for f in range(n_features):
            v = int(rng.integers(0, 4))
            if v:
                doc[f] = v
        docs.append(doc)
    labels = [int(rng.integers(0, 2)) for _ in range(n_rows)]
    labels[0], labels[-1] = 1, 0
    return docs, labels, n_features


def validate_tree_shape(model: cl.DecisionTreeModel):
    """Every node reachable exactly once; internal nodes have two children."""
    seen = set()
    stack = [0]
    while stack:
        idx = stack.pop()
        assert 0 <= idx < len(model.nodes)
        assert idx not in seen
        seen.add(idx)
        node = model.nodes[idx]
        if node.is_leaf():
            assert node.left == -1 and node.right == -1
        else:
            assert node.left != -1 and node.right != -1
            stack.extend((node.left, node.right))
    assert seen == set(range(len(model.nodes)))


class TestDecisionTree:
    @settings(max_examples=120, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_root_split_matches_exhaustive_oracle(self, seed):
        docs, labels, n_features = tree_instance(seed)
        matrix = docs_to_matrix(docs, labels, n_features)
        model = cl.fit_decision_tree(matrix)
        expected = oracles.best_split(docs, labels, n_features)
        root = model.nodes[0]
        if expected is None:
            assert root.is_leaf()
        else:
            assert (root.feature, root.threshold) == expected

    def test_perfect_feature_gives_depth_one_tree(self):
        docs = [{2: 1}, {2: 2}, {0: 1}, {1: 3}]
        labels = [1, 1, 0, 0]
        matrix = docs_to_matrix(docs, labels, 3)
        model = cl.fit_decision_tree(matrix)
        assert len(model.nodes) == 3  # root plus two leaves
        assert model.nodes[0].feature == 2
        preds = [cl.predict(model, row).label for row in matrix.rows]
        assert preds == labels

    def test_pure_children_stop_splitting(self):
        docs = [{0: 1, 1: 1}, {0: 1, 1: 2}, {1: 1}, {1: 2}]
        matrix = docs_to_matrix(docs, [1, 1, 0, 0], 2)
        model = cl.fit_decision_tree(matrix)
        assert all(n.is_leaf() for n in model.nodes[1:])

    def test_tie_breaks_to_lowest_feature(self):
        # Features 1 and 3 carry the same perfect pattern; 1 must win.
        docs = [{1: 1, 3: 1}, {1: 1, 3: 1}, {}, {}]
        matrix = docs_to_matrix(docs, [1, 1, 0, 0], 4)
        model = cl.fit_decision_tree(matrix)
        assert model.nodes[0].feature == 1

    def test_min_leaf_respected(self):
        docs, labels, n_features = tree_instance(77, max_rows=10)
        matrix = docs_to_matrix(docs, labels, n_features)
        model = cl.fit_decision_tree(matrix, min_leaf=3)
        for node in model.nodes:
            if not node.is_leaf():
                assert model.nodes[node.left].n >= 3
                assert model.nodes[node.right].n >= 3

    def test_max_depth_limits_growth(self):
        docs, labels, n_features = tree_instance(78)
        matrix = docs_to_matrix(docs, labels, n_features)
        model = cl.fit_decision_tree(matrix, max_depth=1)
        assert all(model.nodes[c].is_leaf()
                   for c in (model.nodes[0].left, model.nodes[0].right)
                   if not model.nodes[0].is_leaf())

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_tree_shape_is_proper_binary(self, seed):
        docs, labels, n_features = tree_instance(seed)
        matrix = docs_to_matrix(docs, labels, n_features)
        validate_tree_shape(cl.fit_decision_tree(matrix))

    def test_leaf_tie_predicts_label_one(self):
        leaf = cl.TreeNode(-1, 0.0, -1, -1, 0.5, 4)
        model = cl.DecisionTreeModel([leaf], 2, {})
        assert cl.predict(model, sv({})).label == 1

    def test_single_class_rejected(self):
        with pytest.raises(TrainingError):
            cl.fit_decision_tree(docs_to_matrix([{0: 1}, {1: 1}], [1, 1], 2))

    def test_min_leaf_validation(self):
        matrix = docs_to_matrix([{0: 1}, {1: 1}], [1, 0], 2)
        with pytest.raises(TrainingError):
            cl.fit_decision_tree(matrix, min_leaf=0)


class TestRandomForest:
    def test_single_full_tree_forest_equals_tree(self):
        docs, labels, n_features = tree_instance(12, max_rows=30, max_features=5)
        matrix = docs_to_matrix(docs, labels, n_features)
        tree = cl.fit_decision_tree(matrix)
        forest = cl.fit_random_forest(
            matrix, n_trees=1, mtry=n_features, bootstrap=False, seed=99
        )
        rng = np.random.default_rng(4)
        for _ in range(100):
            probe = sv({int(f): float(rng.integers(0, 4))
                        for f in rng.choice(n_features, 2, replace=False)})
            assert cl.predict(tree, probe).label == cl.predict(forest, probe).label

    def test_same_seed_same_forest(self):
        docs, labels, n_features = tree_instance(13, max_rows=25)
        matrix = docs_to_matrix(docs, labels, n_features)
        a = cl.fit_random_forest(matrix, n_trees=7, seed=5)
        b = cl.fit_random_forest(matrix, n_trees=7, seed=5)
        assert [[vars(n) for n in t.nodes] for t in a.trees] == [
            [vars(n) for n in t.nodes] for t in b.trees
        ]

    def test_different_seeds_usually_differ(self):
        docs, labels, n_features = tree_instance(14, max_rows=25)
        matrix = docs_to_matrix(docs, labels, n_features)
        a = cl.fit_random_forest(matrix, n_trees=7, seed=5)
        b = cl.fit_random_forest(matrix, n_trees=7, seed=6)
        assert [[vars(n) for n in t.nodes] for t in a.trees] != [
            [vars(n) for n in t.nodes] for t in b.trees
        ]

    def test_planted_rule_reaches_perfect_training_accuracy(self):
        docs, labels = planted_docs(800, 1.0, 31)
        vocab = fz.fit_vocabulary(docs, fz.VectorizerConfig("count"))
        rows = [fz.transform_count(d, vocab) for d in docs]
        matrix = cl.LabeledMatrix(rows, labels, len(vocab))
        forest = cl.fit_random_forest(matrix, n_trees=10, seed=8)
        correct = sum(
            cl.predict(forest, row).label == y for row, y in zip(rows, labels)
        )
        assert correct == len(labels)

    def test_vote_fraction_is_score_and_ties_to_one(self):
        leaf_one = cl.DecisionTreeModel([cl.TreeNode(-1, 0.0, -1, -1, 1.0, 1)], 2, {})
        leaf_zero = cl.DecisionTreeModel([cl.TreeNode(-1, 0.0, -1, -1, 0.0, 1)], 2, {})
        forest = cl.RandomForestModel([leaf_one, leaf_zero], 2, {})
        pred = cl.predict(forest, sv({}))
        assert pred.score == 0.5
        assert pred.label == 1

    def test_validation(self):
        matrix = docs_to_matrix([{0: 1}, {1: 1}], [1, 0], 2)
        with pytest.raises(TrainingError):
            cl.fit_random_forest(matrix, n_trees=0)
        with pytest.raises(TrainingError):
            cl.fit_random_forest(matrix, mtry=5)


class TestPredictDispatch:
    def test_out_of_range_feature_rejected(self):
        matrix = docs_to_matrix([{0: 1}, {1: 1}], [1, 0], 2)
        model = cl.fit_multinomial_nb(matrix)
        with pytest.raises(PredictionError, match="out of range"):
            cl.predict(model, sv({5: 1}))

    def test_train_classifier_dispatch(self):
        matrix = docs_to_matrix([{0: 2}, {1: 1}, {0: 1}, {1: 2}], [1, 0, 1, 0], 2)
        for kind in cl.CLASSICAL_KINDS:
            options = {"n_trees": 3} if kind == "random_forest" else {}
            model = cl.train_classifier(kind, matrix, seed=1, **options)
            assert model.kind == kind
            pred = cl.predict(model, matrix.rows[0])
            assert pred.label in (0, 1)

    def test_unknown_kind_rejected(self):
        matrix = docs_to_matrix([{0: 1}, {1: 1}], [1, 0], 2)
        with pytest.raises(TrainingError):
            cl.train_classifier("gbdt", matrix)
