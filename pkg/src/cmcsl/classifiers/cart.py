import heapq

import numpy as np

from ._base import SupportClassifier

# Scores closer than this count as ties and keep the earlier candidate.
_TIE_EPS = 1e-12


def gini(counts):
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float(np.sum(p * p))


def _best_split(X, y, k):
    """Best axis-aligned split of one node by weighted child Gini impurity.

    Returns ``(score, feature, threshold)`` or ``None`` when all rows are
    identical.  Candidates are scanned by feature, then by ascending
    threshold; only a strictly better score replaces the incumbent.
    """
    n, d = X.shape
    totals = np.bincount(y, minlength=k)
    best = None
    for j in range(d):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        change = np.flatnonzero(xs[1:] != xs[:-1])
        if change.size == 0:
            continue
        onehot = np.zeros((n, k))
        onehot[np.arange(n), y[order]] = 1.0
        left = np.cumsum(onehot, axis=0)[change]
        right = totals - left
        n_left = (change + 1).astype(float)
        n_right = n - n_left
        gl = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
        gr = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
        score = (n_left * gl + n_right * gr) / n
        i = int(np.argmin(score))
        if best is None or score[i] < best[0] - _TIE_EPS:
            lo, hi = xs[change[i]], xs[change[i] + 1]
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            best = (float(score[i]), j, float(thr))
    return best


class DecisionTree(SupportClassifier):
    """Unpruned CART classifier using Gini impurity.

    Nodes are expanded best-first (largest impurity decrease first).  Every
    impure node whose rows are not all identical is split, even if no
    candidate lowers impurity, so distinct training points are always
    separated.  Rows with ``x[feature] <= threshold`` go left.

    Attributes
    ----------
    feature_, threshold_, left_, right_ : ndarray
        Flat node arrays; leaves have ``feature_ == -1``.
    value_ : ndarray of shape (n_nodes, n_classes)
        Class frequencies of the training rows reaching each node.
    """

    def _fit(self, X, y):
        k = self.n_classes_
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(idx):
            counts = np.bincount(y[idx], minlength=k).astype(float)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(counts / counts.sum())
            return len(feature) - 1

        heap = []
        counter = 0

        def push(node, idx):
            nonlocal counter
            counts = np.bincount(y[idx], minlength=k)
            if np.count_nonzero(counts) <= 1:
                return
            split = _best_split(X[idx], y[idx], k)
            if split is None:
                return
            gain = gini(counts) - split[0]
            heapq.heappush(heap, (-gain, counter, node, idx, split))
            counter += 1

        root_idx = np.arange(X.shape[0])
        push(new_node(root_idx), root_idx)
        while heap:
            _, _, node, idx, (_, j, thr) = heapq.heappop(heap)
            mask = X[idx, j] <= thr
            li, ri = idx[mask], idx[~mask]
            feature[node], threshold[node] = j, thr
            left[node] = new_node(li)
            right[node] = new_node(ri)
            push(left[node], li)
            push(right[node], ri)

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.vstack(value)

    @property
    def node_count(self):
        return self.feature_.shape[0]

    def apply(self, X):
        """Index of the leaf reached by each row."""
        X = self._check_X(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature_[node] >= 0
        while np.any(active):
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature_[cur]] <= self.threshold_[cur]
            node[rows] = np.where(go_left, self.left_[cur], self.right_[cur])
            active = self.feature_[node] >= 0
        return node

    def predict_proba(self, X):
        return self.value_[self.apply(X)]
