"""CART trees and the tree ensembles built from them (RF, ET, GBC).

Trees are stored as flat arrays; node 0 is the root and a node with
``feature == -1`` is a leaf.  Rows go left when ``x[feature] <= threshold``.
Split ties go to the lower feature index, then the lower threshold.
"""

import math

import numpy as np

from .base import Estimator, LearnerError


class Tree:
    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def add(self, value):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.value) - 1

    def arrays(self):
        return (np.array(self.feature, dtype=np.int64), np.array(self.threshold),
                np.array(self.left, dtype=np.int64), np.array(self.right, dtype=np.int64),
                np.array(self.value))


def apply_tree(arrs, X):
    feat, thr, left, right, val = arrs
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    while True:
        f = feat[node]
        inner = f >= 0
        if not inner.any():
            return val[node]
        go_left = X[rows[inner], f[inner]] <= thr[node[inner]]
        node[inner] = np.where(go_left, left[node[inner]], right[node[inner]])


def _n_features(spec, d):
    if spec in (None, "all"):
        return d
    if spec == "sqrt":
        return max(1, int(math.floor(math.sqrt(d))))
    if spec == "log2":
        return max(1, int(math.floor(math.log2(d))))
    m = float(spec)
    return max(1, min(d, int(m) if m >= 1 else int(math.floor(m * d))))


def _best_split(Xn, t, kind, min_leaf, feats, rng, random_split):
    """Best (feature, threshold) for one node or None.

    ``kind`` is "gini" (t holds 0/1 labels) or "mse" (t holds targets).
    """
    n = Xn.shape[0]
    best = None
    if random_split:
        for f in feats:
            x = Xn[:, f]
            lo, hi = x.min(), x.max()
            if not hi > lo:
                continue
            thr = rng.uniform(lo, hi)
            go = x <= thr
            nl = int(go.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            score = _split_score(t[go], t[~go], kind)
            if best is None or score < best[0]:
                best = (score, f, thr)
        return None if best is None else best[1:]

    Xf = Xn[:, feats]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)
    ts = t[order]
    nl = np.arange(1, n)[:, None].astype(np.float64)
    nr = n - nl
    csum = np.cumsum(ts, axis=0)[:-1]
    total = ts.sum(axis=0)[None, :]
    if kind == "gini":
        pl = csum / nl
        pr = (total - csum) / nr
        score = nl * 2 * pl * (1 - pl) + nr * 2 * pr * (1 - pr)
    else:
        score = -(csum**2 / nl + (total - csum) ** 2 / nr)
    ok = xs[:-1] < xs[1:]
    pos = np.arange(1, n)[:, None]
    ok &= (pos >= min_leaf) & (n - pos >= min_leaf)
    if not ok.any():
        return None
    score = np.where(ok, score, np.inf)
    flat = score.T.ravel()  # feature-major: ties keep the lower feature, then lower threshold
    k = int(np.argmin(flat))
    j, i = divmod(k, n - 1)
    a, b = xs[i, j], xs[i + 1, j]
    thr = 0.5 * (a + b)
    if not a <= thr < b:
        thr = a
    return feats[j], thr


def _split_score(tl, tr, kind):
    if kind == "gini":
        def g(t):
            p = t.mean()
            return t.size * 2 * p * (1 - p)
        return g(tl) + g(tr)
    return -(tl.sum() ** 2 / tl.size + tr.sum() ** 2 / tr.size)


def grow(X, t, kind, leaf_value, max_depth=None, min_leaf=1, max_features=None,
         rng=None, random_split=False):
    """Grow one tree depth-first (left child first)."""
    n, d = X.shape
    m = _n_features(max_features, d)
    depth_cap = max_depth if max_depth is not None else 10**9
    tree = Tree()
    root = tree.add(leaf_value(np.arange(n)))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        tn = t[idx]
        if depth >= depth_cap or idx.size < 2 * min_leaf:
            continue
        if kind == "gini" and (tn.min() == tn.max()):
            continue
        if m < d:
            feats = np.sort(rng.choice(d, m, replace=False))
        else:
            feats = np.arange(d)
        split = _best_split(X[idx], tn, kind, min_leaf, feats, rng, random_split)
        if split is None:
            continue
        f, thr = split
        go = X[idx, f] <= thr
        li, ri = idx[go], idx[~go]
        tree.feature[node] = int(f)
        tree.threshold[node] = float(thr)
        l = tree.add(leaf_value(li))
        r = tree.add(leaf_value(ri))
        tree.left[node] = l
        tree.right[node] = r
        stack.append((r, ri, depth + 1))
        stack.append((l, li, depth + 1))
    return tree.arrays()


def _opt_int(v):
    return None if v in (None, "none", "None") else int(v)


class _TreeSet(Estimator):
    """Holds a list of trees in flat arrays for persistence."""

    def _pack(self, trees):
        self.trees = trees

    def state(self):
        cols = list(zip(*self.trees))
        sizes = np.array([len(f) for f in cols[0]], dtype=np.int64)
        out = {name: np.concatenate(c) for name, c in zip(("feature", "threshold", "left", "right", "value"), cols)}
        out["sizes"] = sizes
        return out

    def load(self, s):
        bounds = np.concatenate([[0], np.cumsum(s["sizes"])])
        self.trees = [tuple(s[k][a:b] for k in ("feature", "threshold", "left", "right", "value"))
                      for a, b in zip(bounds[:-1], bounds[1:])]
        return self


class DecisionTree(_TreeSet):
    threshold = 0.5

    def fit(self, X, y, hp, rng):
        yf = y.astype(np.float64)
        arr = grow(X, yf, "gini", lambda i: yf[i].mean(), _opt_int(hp.get("max_depth")),
                   int(hp.get("min_samples_leaf", 1)), hp.get("max_features"), rng)
        self._pack([arr])
        return self

    def decision(self, X):
        return apply_tree(self.trees[0], X)


class RandomForest(_TreeSet):
    """Bootstrap trees with per-node feature subsampling; score = vote fraction."""

    threshold = 0.5
    random_split = False
    bootstrap = True

    def fit(self, X, y, hp, rng):
        yf = y.astype(np.float64)
        n = X.shape[0]
        trees = []
        for _ in range(int(hp.get("n_trees", 100))):
            idx = rng.integers(0, n, n) if self.bootstrap else np.arange(n)
            Xb, yb = X[idx], yf[idx]
            if yb.min() == yb.max():
                trees.append(grow(Xb, yb, "gini", lambda i, yb=yb: yb[i].mean(), max_depth=0))
                continue
            trees.append(grow(Xb, yb, "gini", lambda i, yb=yb: yb[i].mean(),
                              _opt_int(hp.get("max_depth")), int(hp.get("min_samples_leaf", 1)),
                              hp.get("max_features", "sqrt"), rng, self.random_split))
        self._pack(trees)
        return self

    def decision(self, X):
        votes = np.zeros(X.shape[0])
        for t in self.trees:
            votes += apply_tree(t, X) >= 0.5
        return votes / len(self.trees)


class ExtraTrees(RandomForest):
    random_split = True
    bootstrap = False


class GradientBoosting(_TreeSet):
    """Logistic-loss boosting of depth-limited regression trees.

    Trees fit the residual ``y - p``; each leaf holds the Newton step
    ``sum(y - p) / sum(p (1 - p))``, shrunk by the learning rate.
    """

    threshold = 0.5

    def fit(self, X, y, hp, rng):
        lr = float(hp.get("learning_rate", 0.1))
        depth = int(hp.get("max_depth", 3))
        n_trees = int(hp.get("n_trees", 100))
        yf = y.astype(np.float64)
        p0 = yf.mean()
        if not 0 < p0 < 1:
            raise LearnerError("gradient boosting needs both classes")
        self.f0 = math.log(p0 / (1 - p0))
        F = np.full(X.shape[0], self.f0)
        trees = []
        for _ in range(n_trees):
            p = 1.0 / (1.0 + np.exp(-F))
            r = yf - p
            h = p * (1 - p)

            def leaf(i, r=r, h=h):
                return lr * r[i].sum() / max(h[i].sum(), 1e-12)

            arr = grow(X, r, "mse", leaf, depth, int(hp.get("min_samples_leaf", 1)))
            trees.append(arr)
            F = F + apply_tree(arr, X)
        self._pack(trees)
        return self

    def decision(self, X):
        F = np.full(X.shape[0], self.f0)
        for t in self.trees:
            F = F + apply_tree(t, X)
        return 1.0 / (1.0 + np.exp(-F))

    def state(self):
        s = super().state()
        s["f0"] = np.array([self.f0])
        return s

    def load(self, s):
        super().load(s)
        self.f0 = float(s["f0"][0])
        return self
