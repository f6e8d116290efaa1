"""Bagged ensembles of small random trees and weighted majority votes."""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataio import NOT_EVALUATED, PredictionTable

THREADS_ENV = "MVBOUND_THREADS"
_MAX_BOOTSTRAP_RETRIES = 10


@dataclass(frozen=True)
class TreeConfig:
    """Base learner settings. ``max_depth=1`` gives a decision stump.

    ``max_features`` is the number of randomly drawn candidate features per
    split: an int, a fraction in (0, 1], ``"sqrt"``, or None for all.
    """

    max_depth: int = 3
    max_features: object = "sqrt"
    min_samples_leaf: int = 1

    def n_candidates(self, d):
        mf = self.max_features
        if mf is None:
            return d
        if mf == "sqrt":
            return max(1, int(math.ceil(math.sqrt(d))))
        if isinstance(mf, float):
            return max(1, min(d, int(math.ceil(mf * d))))
        return max(1, min(d, int(mf)))


STUMP = TreeConfig(max_depth=1, max_features=None)


class RandomTree:
    """Depth-limited classification tree with Gini splits on random features."""

    def __init__(self, n_classes, config=TreeConfig()):
        self.n_classes = n_classes
        self.config = config
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def _new_node(self):
        for arr in (self.feature, self.left, self.right, self.value):
            arr.append(-1)
        self.threshold.append(0.0)
        return len(self.value) - 1

    def fit(self, X, y, rng):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        self._grow(X, y, np.arange(len(y)), 0, rng)
        self.feature = np.asarray(self.feature)
        self.threshold = np.asarray(self.threshold)
        self.left = np.asarray(self.left)
        self.right = np.asarray(self.right)
        self.value = np.asarray(self.value)
        return self

    def _grow(self, X, y, idx, depth, rng):
        node = self._new_node()
        counts = np.bincount(y[idx], minlength=self.n_classes)
        self.value[node] = int(np.argmax(counts))
        cfg = self.config
        if depth >= cfg.max_depth or counts.max() == idx.size or idx.size < 2 * cfg.min_samples_leaf:
            return node
        split = self._best_split(X, y, idx, counts, rng)
        if split is None:
            return node
        f, thr = split
        go_left = X[idx, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self._grow(X, y, idx[go_left], depth + 1, rng)
        self.right[node] = self._grow(X, y, idx[~go_left], depth + 1, rng)
        return node

    def _best_split(self, X, y, idx, counts, rng):
        d = X.shape[1]
        candidates = rng.choice(d, size=self.config.n_candidates(d), replace=False)
        n = idx.size
        leaf = self.config.min_samples_leaf
        parent = n - np.dot(counts, counts) / n
        best = None
        best_score = parent - 1e-12
        onehot = np.eye(self.n_classes)
        for f in candidates:
            order = np.argsort(X[idx, f], kind="stable")
            xs = X[idx[order], f]
            cum = np.cumsum(onehot[y[idx[order]]], axis=0)[:-1]
            n_left = np.arange(1, n)
            valid = (xs[:-1] < xs[1:]) & (n_left >= leaf) & (n - n_left >= leaf)
            if not valid.any():
                continue
            right = counts[None, :] - cum
            score = (n_left - (cum * cum).sum(axis=1) / n_left) + (
                (n - n_left) - (right * right).sum(axis=1) / (n - n_left)
            )
            score = np.where(valid, score, np.inf)
            i = int(np.argmin(score))
            if score[i] < best_score:
                best_score = score[i]
                best = (int(f), 0.5 * (xs[i] + xs[i + 1]))
        return best

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]


@dataclass
class BaggedEnsemble:
    hypotheses: list
    table: PredictionTable
    seed: int
    n_classes: int

    def predict_matrix(self, X):
        """H x N matrix of hypothesis predictions."""
        return np.vstack([h.predict(X) for h in self.hypotheses])

    def prediction_table(self, dataset):
        """Fully evaluated table of every hypothesis on ``dataset``."""
        return PredictionTable.full(self.predict_matrix(dataset.features), dataset.labels, self.n_classes)


def _thread_count(n_jobs):
    if n_jobs is not None:
        return max(1, int(n_jobs))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _train_one(dataset, learner, n_boot, seed_seq):
    rng = np.random.default_rng(seed_seq)
    N = len(dataset)
    for _ in range(_MAX_BOOTSTRAP_RETRIES):
        boot = rng.integers(N, size=n_boot)
        oob = np.bincount(boot, minlength=N) == 0
        if oob.any():
            break
    else:
        raise RuntimeError(f"no out-of-bag points after {_MAX_BOOTSTRAP_RETRIES} bootstrap draws")
    tree = RandomTree(dataset.class_count, learner)
    tree.fit(dataset.features[boot], dataset.labels[boot], rng)
    preds = np.full(N, NOT_EVALUATED, dtype=np.int64)
    preds[oob] = tree.predict(dataset.features[oob])
    return tree, preds, oob


def train_bagged(dataset, n_hypotheses, learner=TreeConfig(), seed=0, bootstrap_fraction=1.0, n_jobs=None):
    """Train ``n_hypotheses`` trees on bootstrap samples of ``dataset``.

    Each tree draws ``round(bootstrap_fraction * N)`` points with
    replacement; the points it never saw form its out-of-bag validation set,
    on which its predictions are recorded. Every hypothesis gets its own
    random stream spawned from ``seed``, so results do not depend on the
    number of threads.
    """
    if n_hypotheses < 2:
        raise ValueError("an ensemble needs at least 2 hypotheses")
    if not 0.0 < bootstrap_fraction:
        raise ValueError("bootstrap_fraction must be positive")
    n_boot = max(1, int(round(bootstrap_fraction * len(dataset))))
    streams = np.random.SeedSequence(seed).spawn(n_hypotheses)
    jobs = _thread_count(n_jobs)
    if jobs == 1:
        results = [_train_one(dataset, learner, n_boot, s) for s in streams]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda s: _train_one(dataset, learner, n_boot, s), streams))
    trees = [r[0] for r in results]
    table = PredictionTable(
        np.vstack([r[1] for r in results]),
        dataset.labels,
        np.vstack([r[2] for r in results]),
        dataset.class_count,
    )
    return BaggedEnsemble(trees, table, seed, dataset.class_count)


def _check_rho(rho):
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 1 or np.any(rho < 0) or not np.isfinite(rho).all() or rho.sum() <= 0:
        raise ValueError("rho must be a non-negative, non-zero weight vector")
    return rho


def vote_matrix(rho, predictions, n_classes):
    """C x N matrix of rho-weighted votes per label."""
    predictions = np.asarray(predictions)
    votes = np.zeros((n_classes, predictions.shape[1]))
    for h, w in enumerate(rho):
        np.add.at(votes, (predictions[h], np.arange(predictions.shape[1])), w)
    return votes


def _argmax_smallest(votes, total):
    # labels within a relative 1e-12 of the top vote count as tied
    top = votes.max(axis=0)
    tied = votes >= top - 1e-12 * total
    return np.argmax(tied, axis=0)


def mv_predict_matrix(rho, predictions, n_classes):
    """Majority-vote label for every column of an H x N prediction matrix.

    Ties go to the smallest label.
    """
    rho = _check_rho(rho)
    predictions = np.asarray(predictions)
    if predictions.min() < 0:
        raise ValueError("majority vote needs a prediction from every hypothesis")
    return _argmax_smallest(vote_matrix(rho, predictions, n_classes), rho.sum())


def mv_predict(rho, point_predictions, n_classes=None):
    """Majority-vote label of a single point given its H predictions."""
    preds = np.asarray(point_predictions).reshape(-1, 1)
    if n_classes is None:
        n_classes = int(preds.max()) + 1
    return int(mv_predict_matrix(rho, preds, n_classes)[0])


@dataclass(frozen=True)
class MajorityVote:
    rho: np.ndarray
    n_classes: int

    def predict(self, point_predictions):
        return mv_predict(self.rho, point_predictions, self.n_classes)

    def predict_matrix(self, predictions):
        return mv_predict_matrix(self.rho, predictions, self.n_classes)


def mv_test_loss(rho, table):
    """Zero-one loss of the rho-weighted vote on a fully evaluated table."""
    if not table.oob_mask.all():
        raise ValueError("test loss needs a fully evaluated prediction table")
    labels = mv_predict_matrix(rho, table.predictions, table.n_classes)
    return float(np.mean(labels != table.truth))


def best_single_hypothesis(table, test=None):
    """Hypothesis with the smallest validation loss (ties to smallest index).

    Returns ``(index, loss)``; the loss is measured on ``test`` when given,
    otherwise it is the validation loss itself.
    """
    errors = table.errors().sum(axis=1)
    sizes = table.oob_mask.sum(axis=1)
    oob_loss = errors / sizes
    h = int(np.argmin(oob_loss))
    if test is None:
        return h, float(oob_loss[h])
    return h, float(np.mean(test.predictions[h] != test.truth))
