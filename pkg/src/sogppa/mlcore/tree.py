"""CART regression trees with exhaustive variance-reduction splits."""

from __future__ import annotations

from dataclasses import dataclass, asdict, field

import numpy as np


@dataclass
class TrainConfig:
    n_trees: int = 1
    max_depth: int | None = None
    min_samples_leaf: int = 1
    learning_rate: float = 0.3
    lam: float = 1.0
    feature_fraction: float = 1.0
    bag_fraction: float = 1.0
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0.0 <= self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in [0, 1]")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        for name in ("feature_fraction", "bag_fraction"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DecisionTree:
    """Flat array tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    leaf_index: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.n_nodes else 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index reached by every row."""
        X = np.asarray(X, dtype=float)
        idx = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[idx]
            inner = f >= 0
            if not inner.any():
                return idx
            r, n, fi = rows[inner], idx[inner], f[inner]
            go_left = X[r, fi] <= self.threshold[n]
            idx[inner] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = check_X(X, self.n_features)
        return self.value[self.apply(X)]


def check_X(X, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"feature arity mismatch: model expects {n_features}, got {X.shape[1]}")
    if np.isnan(X).any():
        raise ValueError("NaN feature value")
    return X


def check_Xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = check_X(X)
    y = np.asarray(y, dtype=float).ravel()
    if len(X) == 0:
        raise ValueError("empty training data")
    if len(X) != len(y):
        raise ValueError(f"{len(X)} feature rows but {len(y)} targets")
    if not np.isfinite(y).all():
        raise ValueError("non-finite target value")
    return X, y


def best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int = 1):
    """Best variance-reduction split over ``features``.

    Returns ``(gain, feature, threshold)`` or ``None``. Ties go to the lowest
    feature index, then the lowest threshold.
    """
    n = len(y)
    if n < 2 * min_leaf or len(features) == 0:
        return None
    Xf = X[:, features]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)
    yc = y - y.mean()
    ys = yc[order]
    total = yc.sum()
    left = np.cumsum(ys, axis=0)[:-1]
    nl = np.arange(1, n, dtype=float)[:, None]
    nr = n - nl
    gain = left ** 2 / nl + (total - left) ** 2 / nr - total ** 2 / n
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        valid &= (nl >= min_leaf) & (nr >= min_leaf)
    gain = np.where(valid, gain, -np.inf)
    flat = gain.T.ravel()
    best = flat.max()
    # gains equal up to rounding count as ties (same partition reached through different sums)
    tol = 1e-10 * float(np.dot(yc, yc))
    if not best > tol:
        return None
    k = int(np.argmax(flat >= best - tol))
    best = flat[k]
    fi, pos = divmod(k, n - 1)
    lo, hi = xs[pos, fi], xs[pos + 1, fi]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return float(best), int(features[fi]), float(thr)


def fit_tree(X, y, cfg: TrainConfig | None = None, features: np.ndarray | None = None) -> DecisionTree:
    """Greedy CART regression tree."""
    cfg = cfg or TrainConfig()
    X, y = check_Xy(X, y)
    n_features = X.shape[1]
    feats = np.arange(n_features) if features is None else np.sort(np.asarray(features))
    max_depth = np.inf if cfg.max_depth is None else cfg.max_depth
    feature, threshold, left, right, value = [], [], [], [], []
    leaf_index = np.zeros(len(y), dtype=np.int64)

    def new_node() -> int:
        for arr in (feature, left, right):
            arr.append(-1)
        threshold.append(0.0)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        value[node] = float(yn.mean())
        split = None
        if depth < max_depth and len(idx) >= 2 * cfg.min_samples_leaf and yn.max() > yn.min():
            split = best_split(X[idx], yn, feats, cfg.min_samples_leaf)
        if split is None:
            leaf_index[idx] = node
            continue
        _, f, thr = split
        go_left = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        li, ri = new_node(), new_node()
        left[node], right[node] = li, ri
        # right pushed first so the left subtree is numbered first
        stack.append((ri, idx[~go_left], depth + 1))
        stack.append((li, idx[go_left], depth + 1))
    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
        n_features=n_features,
        leaf_index=leaf_index,
    )
