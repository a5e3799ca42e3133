"""Six classical classifiers behind one fit/predict contract.

Multinomial and Bernoulli naive Bayes, logistic regression (full-batch
gradient descent), a linear SVM (stochastic subgradient with 1/t steps),
a Gini decision tree, and a bagging random forest. Training code is all
local; numpy is used for array arithmetic only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .errors import DivergenceError, PredictionError, TrainingError
from .featurize import SparseVector


@dataclass
class LabeledMatrix:
    """Sparse rows with binary labels and a fixed feature count."""

    rows: list[SparseVector]
    labels: list[int]
    n_features: int
    _csr: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if len(self.rows) != len(self.labels):
            raise TrainingError("rows and labels must have the same length")
        if any(lab not in (0, 1) for lab in self.labels):
            raise TrainingError("labels must be 0 or 1")
        for row in self.rows:
            if row.indices.size and int(row.indices[-1]) >= self.n_features:
                raise TrainingError(
                    f"feature index {int(row.indices[-1])} out of range "
                    f"(n_features={self.n_features})"
                )

    def __len__(self) -> int:
        return len(self.rows)

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(row_ids, col_ids, values) over all stored entries."""
        if self._csr is None:
            counts = np.array([r.indices.size for r in self.rows], dtype=np.int64)
            row_ids = np.repeat(np.arange(len(self.rows), dtype=np.int64), counts)
            if counts.sum():
                col_ids = np.concatenate([r.indices for r in self.rows])
                values = np.concatenate([r.values for r in self.rows])
            else:
                col_ids = np.empty(0, np.int64)
                values = np.empty(0, np.float64)
            self._csr = (row_ids, col_ids, values)
        return self._csr

    def dot_weights(self, weights: np.ndarray, bias: float) -> np.ndarray:
        row_ids, col_ids, values = self.csr()
        z = np.bincount(row_ids, weights=values * weights[col_ids], minlength=len(self.rows))
        return z + bias

    def label_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)


@dataclass(frozen=True)
class Prediction:
    label: int
    score: float


def _require_both_classes(labels) -> None:
    ones = sum(labels)
    if ones == 0 or ones == len(labels):
        raise TrainingError("training set contains a single class")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _posterior_from_joints(j0: float, j1: float) -> float:
    """P(label 1) from per-class joint log scores; degenerate -inf/-inf -> 0.5."""
    if math.isinf(j0) and j0 < 0 and math.isinf(j1) and j1 < 0:
        return 0.5
    m = max(j0, j1)
    e0 = math.exp(j0 - m)
    e1 = math.exp(j1 - m)
    return e1 / (e0 + e1)


# ---------------------------------------------------------------------------
# Naive Bayes
# ---------------------------------------------------------------------------

@dataclass
class MultinomialNbModel:
    kind: ClassVar[str] = "multinomial_nb"
    class_log_prior: np.ndarray   # (2,)
    feature_log_prob: np.ndarray  # (2, V)
    n_features: int
    train_meta: dict

    def score_one(self, x: SparseVector) -> float:
        joints = []
        for c in (0, 1):
            j = float(self.class_log_prior[c])
            if x.indices.size:
                j += float(self.feature_log_prob[c, x.indices] @ x.values)
            joints.append(j)
        return _posterior_from_joints(joints[0], joints[1])


@dataclass
class BernoulliNbModel:
    kind: ClassVar[str] = "bernoulli_nb"
    class_log_prior: np.ndarray  # (2,)
    log_presence: np.ndarray     # (2, V)
    log_absence: np.ndarray      # (2, V)
    n_features: int
    train_meta: dict

    def score_one(self, x: SparseVector) -> float:
        present = np.zeros(self.n_features, dtype=bool)
        if x.indices.size:
            present[x.indices] = True
        joints = []
        for c in (0, 1):
            j = float(self.class_log_prior[c])
            j += float(self.log_presence[c, present].sum())
            j += float(self.log_absence[c, ~present].sum())
            joints.append(j)
        return _posterior_from_joints(joints[0], joints[1])


def _class_priors(data: LabeledMatrix) -> tuple[np.ndarray, np.ndarray]:
    y = data.label_array()
    n1 = int(y.sum())
    n0 = len(y) - n1
    priors = np.log(np.array([n0, n1], dtype=np.float64)) - math.log(len(y))
    return y, priors


def fit_multinomial_nb(data: LabeledMatrix, alpha: float = 1.0) -> MultinomialNbModel:
    """Class log-priors from label frequencies, token log-probabilities with
    additive smoothing `alpha` over the full feature set."""
    if alpha < 0:
        raise TrainingError("alpha must be >= 0")
    _require_both_classes(data.labels)
    y, priors = _class_priors(data)
    v = data.n_features
    row_ids, col_ids, values = data.csr()
    counts = np.zeros((2, v), dtype=np.float64)
    for c in (0, 1):
        mask = y[row_ids] == c
        counts[c] = np.bincount(col_ids[mask], weights=values[mask], minlength=v)
    with np.errstate(divide="ignore"):
        log_prob = np.log(counts + alpha) - np.log(
            counts.sum(axis=1, keepdims=True) + alpha * v
        )
    meta = {"alpha": alpha, "n_train": len(data)}
    return MultinomialNbModel(priors, log_prob, v, meta)


def fit_bernoulli_nb(data: LabeledMatrix, alpha: float = 1.0) -> BernoulliNbModel:
    """As multinomial, but on feature presence, with explicit absence factors."""
    if alpha < 0:
        raise TrainingError("alpha must be >= 0")
    _require_both_classes(data.labels)
    y, priors = _class_priors(data)
    v = data.n_features
    row_ids, col_ids, _ = data.csr()
    doc_counts = np.zeros((2, v), dtype=np.float64)
    for c in (0, 1):
        mask = y[row_ids] == c
        doc_counts[c] = np.bincount(col_ids[mask], minlength=v)
    n_per_class = np.array([len(y) - y.sum(), y.sum()], dtype=np.float64)
    p = (doc_counts + alpha) / (n_per_class[:, None] + 2.0 * alpha)
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
        log_q = np.log(1.0 - p)
    meta = {"alpha": alpha, "n_train": len(data)}
    return BernoulliNbModel(priors, log_p, log_q, v, meta)


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------

@dataclass
class LogisticRegressionModel:
    kind: ClassVar[str] = "logistic_regression"
    weights: np.ndarray
    bias: float
    n_features: int
    train_meta: dict

    def score_one(self, x: SparseVector) -> float:
        return float(_sigmoid(np.array(x.dot(self.weights) + self.bias))[()])


def logistic_loss(data: LabeledMatrix, weights: np.ndarray, bias: float, l2: float) -> float:
    """Mean log-loss plus (l2/2) * ||w||^2 (bias unregularized)."""
    y = data.label_array().astype(np.float64)
    z = data.dot_weights(weights, bias)
    losses = np.logaddexp(0.0, z) - y * z
    return float(losses.mean() + 0.5 * l2 * (weights @ weights))


def logistic_gradient(
    data: LabeledMatrix, weights: np.ndarray, bias: float, l2: float
) -> tuple[np.ndarray, float]:
    y = data.label_array().astype(np.float64)
    z = data.dot_weights(weights, bias)
    residual = (_sigmoid(z) - y) / len(data)
    row_ids, col_ids, values = data.csr()
    gw = np.bincount(col_ids, weights=values * residual[row_ids], minlength=data.n_features)
    gw += l2 * weights
    return gw, float(residual.sum())


def fit_logistic_regression(
    data: LabeledMatrix,
    l2: float = 1e-4,
    lr: float = 0.1,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> LogisticRegressionModel:
    """Full-batch gradient descent; stops when the gradient inf-norm < tol."""
    if max_iter < 1:
        raise TrainingError("max_iter must be >= 1")
    if l2 < 0:
        raise TrainingError("l2 must be >= 0")
    _require_both_classes(data.labels)
    w = np.zeros(data.n_features, dtype=np.float64)
    b = 0.0
    converged = False
    n_iter = 0
    loss = math.nan
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, max_iter + 1):
            n_iter = it
            loss = logistic_loss(data, w, b, l2)
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"logistic regression diverged at iteration {it} (non-finite loss)"
                )
            gw, gb = logistic_gradient(data, w, b, l2)
            gnorm = max(float(np.abs(gw).max()) if gw.size else 0.0, abs(gb))
            if gnorm < tol:
                converged = True
                break
            w -= lr * gw
            b -= lr * gb
    meta = {
        "l2": l2, "lr": lr, "max_iter": max_iter, "tol": tol,
        "converged": converged, "n_iter": n_iter, "final_loss": loss,
    }
    return LogisticRegressionModel(w, b, data.n_features, meta)


# ---------------------------------------------------------------------------
# Linear SVM
# ---------------------------------------------------------------------------

@dataclass
class LinearSvmModel:
    kind: ClassVar[str] = "linear_svm"
    weights: np.ndarray
    bias: float
    n_features: int
    train_meta: dict

    def score_one(self, x: SparseVector) -> float:
        return x.dot(self.weights) + self.bias


def svm_objective(data: LabeledMatrix, weights: np.ndarray, bias: float, c: float) -> float:
    """(1/2)(||w||^2 + b^2) + c * sum of hinge losses."""
    y_pm = 2.0 * data.label_array().astype(np.float64) - 1.0
    margins = y_pm * data.dot_weights(weights, bias)
    hinge = np.maximum(0.0, 1.0 - margins).sum()
    return float(0.5 * (weights @ weights + bias * bias) + c * hinge)


def fit_linear_svm(
    data: LabeledMatrix,
    c: float = 1.0,
    lr: float = 1.0,
    epochs: int = 5,
    seed: int = 0,
) -> LinearSvmModel:
    """Seeded stochastic subgradient descent with lr/t step decay.

    The bias rides along as a regularized constant feature, so each step
    shrinks (w, b) by (1 - lr/t) and adds the hinge subgradient of the
    sampled row scaled by c*n when its margin is below 1.
    """
    if epochs < 1:
        raise TrainingError("epochs must be >= 1")
    if c < 0:
        raise TrainingError("c must be >= 0")
    _require_both_classes(data.labels)
    rng = np.random.default_rng(seed)
    n = len(data)
    y_pm = 2.0 * data.label_array().astype(np.float64) - 1.0
    w = np.zeros(data.n_features, dtype=np.float64)
    b = 0.0
    t = 0
    objectives = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        for i in order:
            t += 1
            eta = lr / t
            row = data.rows[i]
            margin = y_pm[i] * (row.dot(w) + b)
            w *= 1.0 - eta
            b *= 1.0 - eta
            if margin < 1.0:
                scale = eta * c * n * y_pm[i]
                if row.indices.size:
                    w[row.indices] += scale * row.values
                b += scale
        if not (np.isfinite(w).all() and math.isfinite(b)):
            raise DivergenceError(f"linear SVM diverged during epoch {epoch}")
        objectives.append(svm_objective(data, w, b, c))
    meta = {
        "c": c, "lr": lr, "epochs": epochs, "seed": seed,
        "objective_per_epoch": objectives,
    }
    return LinearSvmModel(w, b, data.n_features, meta)


# ---------------------------------------------------------------------------
# Decision tree and random forest
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    feature: int      # -1 marks a leaf
    threshold: float
    left: int
    right: int
    p1: float         # fraction of label-1 rows at the node
    n: int

    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass
class DecisionTreeModel:
    kind: ClassVar[str] = "decision_tree"
    nodes: list[TreeNode]
    n_features: int
    train_meta: dict

    def leaf_for(self, x: SparseVector) -> TreeNode:
        node = self.nodes[0]
        while not node.is_leaf():
            if x.value_at(node.feature) >= node.threshold:
                node = self.nodes[node.right]
            else:
                node = self.nodes[node.left]
        return node

    def score_one(self, x: SparseVector) -> float:
        return self.leaf_for(x).p1


@dataclass
class RandomForestModel:
    kind: ClassVar[str] = "random_forest"
    trees: list[DecisionTreeModel]
    n_features: int
    train_meta: dict

    def score_one(self, x: SparseVector) -> float:
        votes = sum(1 for tree in self.trees if tree.leaf_for(x).p1 >= 0.5)
        return votes / len(self.trees)


def _feature_columns(data: LabeledMatrix) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-feature (row_ids, values) arrays sorted by row id."""
    row_ids, col_ids, values = data.csr()
    order = np.lexsort((row_ids, col_ids))
    col_sorted = col_ids[order]
    starts = np.searchsorted(col_sorted, np.arange(data.n_features + 1))
    cols = []
    for f in range(data.n_features):
        sl = order[starts[f]:starts[f + 1]]
        cols.append((row_ids[sl], values[sl]))
    return cols


def _node_values(col: tuple[np.ndarray, np.ndarray], rows: np.ndarray) -> np.ndarray:
    """Feature values of the node's rows (0 where the feature is absent)."""
    fr, fv = col
    out = np.zeros(rows.size, dtype=np.float64)
    if fr.size:
        pos = np.searchsorted(fr, rows)
        pos_c = np.minimum(pos, fr.size - 1)
        hit = fr[pos_c] == rows
        out[hit] = fv[pos_c[hit]]
    return out


def _node_score(n1: int, n0: int) -> tuple[int, int]:
    """Purity score (n1^2 + n0^2, n): larger score/den means lower Gini."""
    return n1 * n1 + n0 * n0, n1 + n0


def _best_split(cols, y01, rows, features, min_leaf):
    """Minimum-weighted-Gini split over (feature, midpoint-threshold) pairs.

    Candidates are screened with float scores, then near-ties are re-ranked
    with exact integer arithmetic so that the lowest-feature / lowest-
    threshold tie rule is honored regardless of rounding.
    """
    n = rows.size
    ones = y01[rows]
    tot1 = int(ones.sum())
    tot0 = n - tot1
    parent_num, parent_den = _node_score(tot1, tot0)

    finalists = []  # (s_float, feature, threshold, aL, nL, aR, nR)
    best_float = -math.inf
    for f in features:
        vals = _node_values(cols[f], rows)
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sy = ones[order]
        change = np.nonzero(np.diff(sv))[0]
        if change.size == 0:
            continue
        cum1 = np.cumsum(sy)
        n_left = change + 1
        n1_left = cum1[change]
        n0_left = n_left - n1_left
        n_right = n - n_left
        n1_right = tot1 - n1_left
        n0_right = n_right - n1_right
        ok = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not ok.any():
            continue
        a_left = n1_left * n1_left + n0_left * n0_left
        a_right = n1_right * n1_right + n0_right * n0_right
        with np.errstate(invalid="ignore"):
            s = a_left / n_left + a_right / n_right
        s[~ok] = -math.inf
        s_max = float(s.max())
        best_float = max(best_float, s_max)
        near = s >= s_max - 1e-9 * (1.0 + abs(s_max))
        thresholds = (sv[change] + sv[change + 1]) / 2.0
        for k in np.nonzero(near)[0]:
            finalists.append((
                float(s[k]), int(f), float(thresholds[k]),
                int(a_left[k]), int(n_left[k]), int(a_right[k]), int(n_right[k]),
            ))
    if not finalists:
        return None

    eps = 1e-9 * (1.0 + abs(best_float))
    best = None  # (num, den, feature, threshold)
    for s_f, f, thr, a_l, n_l, a_r, n_r in finalists:
        if s_f < best_float - eps:
            continue
        num = a_l * n_r + a_r * n_l  # exact: s = num / (n_l * n_r)
        den = n_l * n_r
        if best is None:
            best = (num, den, f, thr)
            continue
        diff = num * best[1] - best[0] * den
        if diff > 0 or (diff == 0 and (f, thr) < (best[2], best[3])):
            best = (num, den, f, thr)
    # Split only on a strict Gini improvement over the parent.
    if best[0] * parent_den <= parent_num * best[1]:
        return None
    return best[2], best[3]


def _grow_tree(cols, y01, rows, *, max_depth, min_leaf, mtry, rng, n_features):
    nodes: list[TreeNode] = []
    stack = [(np.sort(rows), 0, -1, True)]  # rows, depth, parent index, is-left-child
    while stack:
        node_rows, depth, parent, is_left = stack.pop()
        idx = len(nodes)
        if parent >= 0:
            if is_left:
                nodes[parent].left = idx
            else:
                nodes[parent].right = idx
        n = node_rows.size
        n1 = int(y01[node_rows].sum())
        p1 = n1 / n
        split = None
        can_split = (
            0 < n1 < n
            and (max_depth is None or depth < max_depth)
            and n >= 2 * min_leaf
        )
        if can_split:
            if mtry is not None and mtry < n_features:
                features = np.sort(rng.choice(n_features, size=mtry, replace=False))
            else:
                features = np.arange(n_features)
            split = _best_split(cols, y01, node_rows, features, min_leaf)
        if split is None:
            nodes.append(TreeNode(-1, 0.0, -1, -1, p1, n))
            continue
        f, thr = split
        vals = _node_values(cols[f], node_rows)
        right_rows = node_rows[vals >= thr]
        left_rows = node_rows[vals < thr]
        nodes.append(TreeNode(f, thr, -1, -1, p1, n))
        stack.append((right_rows, depth + 1, idx, False))
        stack.append((left_rows, depth + 1, idx, True))
    return nodes


def fit_decision_tree(
    data: LabeledMatrix,
    max_depth: int | None = None,
    min_leaf: int = 1,
    seed: int = 0,
) -> DecisionTreeModel:
    """Greedy binary Gini tree over (feature, count >= threshold) splits."""
    if min_leaf < 1:
        raise TrainingError("min_leaf must be >= 1")
    _require_both_classes(data.labels)
    cols = _feature_columns(data)
    y01 = data.label_array()
    nodes = _grow_tree(
        cols, y01, np.arange(len(data)),
        max_depth=max_depth, min_leaf=min_leaf, mtry=None, rng=None,
        n_features=data.n_features,
    )
    meta = {"max_depth": max_depth, "min_leaf": min_leaf, "seed": seed}
    return DecisionTreeModel(nodes, data.n_features, meta)


def fit_random_forest(
    data: LabeledMatrix,
    n_trees: int = 100,
    mtry: int | None = None,
    bootstrap: bool = True,
    seed: int = 0,
    max_depth: int | None = None,
    min_leaf: int = 1,
) -> RandomForestModel:
    """Bagged Gini trees; per-tree seeds derive from the master seed."""
    if n_trees < 1:
        raise TrainingError("n_trees must be >= 1")
    if mtry is None:
        mtry = max(1, math.ceil(math.sqrt(data.n_features)))
    if not 1 <= mtry <= data.n_features:
        raise TrainingError(f"mtry must lie in [1, {data.n_features}]")
    if min_leaf < 1:
        raise TrainingError("min_leaf must be >= 1")
    _require_both_classes(data.labels)

    cols = _feature_columns(data)
    y01 = data.label_array()
    n = len(data)
    tree_seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(tree_seeds[i])
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        nodes = _grow_tree(
            cols, y01, rows,
            max_depth=max_depth, min_leaf=min_leaf,
            mtry=mtry, rng=rng, n_features=data.n_features,
        )
        tree_meta = {"max_depth": max_depth, "min_leaf": min_leaf, "tree_index": i}
        trees.append(DecisionTreeModel(nodes, data.n_features, tree_meta))
    meta = {
        "n_trees": n_trees, "mtry": mtry, "bootstrap": bootstrap, "seed": seed,
        "max_depth": max_depth, "min_leaf": min_leaf,
    }
    return RandomForestModel(trees, data.n_features, meta)


# ---------------------------------------------------------------------------
# Unified prediction
# ---------------------------------------------------------------------------

CLASSICAL_KINDS = (
    "multinomial_nb", "bernoulli_nb", "logistic_regression",
    "linear_svm", "decision_tree", "random_forest",
)

_MARGIN_KINDS = {"linear_svm"}


def predict(model, x: SparseVector) -> Prediction:
    """Score a vector; probability kinds threshold at 0.5, SVM at sign.

    Exact-threshold ties resolve to label 1.
    """
    if x.indices.size and int(x.indices[-1]) >= model.n_features:
        raise PredictionError(
            f"feature index {int(x.indices[-1])} out of range for a model "
            f"with {model.n_features} features"
        )
    score = model.score_one(x)
    threshold = 0.0 if model.kind in _MARGIN_KINDS else 0.5
    return Prediction(1 if score >= threshold else 0, float(score))


_FITTERS = {
    "multinomial_nb": fit_multinomial_nb,
    "bernoulli_nb": fit_bernoulli_nb,
    "logistic_regression": fit_logistic_regression,
    "linear_svm": fit_linear_svm,
    "decision_tree": fit_decision_tree,
    "random_forest": fit_random_forest,
}

_SEEDED_KINDS = {"linear_svm", "decision_tree", "random_forest"}


def train_classifier(kind: str, data: LabeledMatrix, seed: int = 0, **options):
    """Dispatch to the fit function for `kind` with its keyword options."""
    if kind not in _FITTERS:
        raise TrainingError(
            f"unknown classifier kind {kind!r}; expected one of {', '.join(CLASSICAL_KINDS)}"
        )
    if kind in _SEEDED_KINDS:
        options = dict(options)
        options.setdefault("seed", seed)
    return _FITTERS[kind](data, **options)
