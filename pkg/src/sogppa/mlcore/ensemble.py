"""Bagged random forests and gradient-boosted regression trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import DecisionTree, TrainConfig, check_X, check_Xy, fit_tree


class _Stack:
    """All trees of an ensemble in one flat array, so rows traverse every tree at once."""

    def __init__(self, trees: list[DecisionTree]):
        sizes = [t.n_nodes for t in trees]
        self.roots = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        off = np.repeat(self.roots, sizes)
        self.feature = np.concatenate([t.feature for t in trees])
        inner = self.feature >= 0
        self.left = np.where(inner, np.concatenate([t.left for t in trees]) + off, -1)
        self.right = np.where(inner, np.concatenate([t.right for t in trees]) + off, -1)
        self.threshold = np.concatenate([t.threshold for t in trees])
        self.value = np.concatenate([t.value for t in trees])

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        """(n_trees, n_rows) matrix of leaf values."""
        idx = np.repeat(self.roots[:, None], len(X), axis=1).ravel()
        rows = np.tile(np.arange(len(X)), len(self.roots))
        active = np.flatnonzero(self.feature[idx] >= 0)
        while len(active):
            n = idx[active]
            go_left = X[rows[active], self.feature[n]] <= self.threshold[n]
            idx[active] = np.where(go_left, self.left[n], self.right[n])
            active = active[self.feature[idx[active]] >= 0]
        return self.value[idx].reshape(len(self.roots), len(X))


def _stack(model) -> _Stack:
    st = model.__dict__.get("_stack")
    if st is None:
        st = model.__dict__["_stack"] = _Stack(model.trees)
    return st


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    n_features: int
    config: TrainConfig
    oob_r: float = float("nan")
    kind: str = "forest"

    def predict(self, X) -> np.ndarray:
        X = check_X(X, self.n_features)
        return np.mean(_stack(self).leaf_values(X), axis=0)


@dataclass
class BoostedModel:
    trees: list[DecisionTree]
    n_features: int
    config: TrainConfig
    base_score: float = 0.0
    loss_history: list[float] = field(default_factory=list)
    kind: str = "gbt"

    def predict(self, X) -> np.ndarray:
        X = check_X(X, self.n_features)
        out = np.full(len(X), self.base_score)
        for v in _stack(self).leaf_values(X):
            out += self.config.learning_rate * v
        return out


def _feature_subset(rng, n_features: int, fraction: float) -> np.ndarray | None:
    if fraction >= 1.0:
        return None
    k = max(1, int(round(fraction * n_features)))
    return np.sort(rng.choice(n_features, size=k, replace=False))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) < 2 or np.std(a) == 0 or np.std(b) == 0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


def fit_forest(X, y, cfg: TrainConfig | None = None) -> ForestModel:
    """Random forest; each tree gets its own child RNG stream."""
    cfg = cfg or TrainConfig(n_trees=80, max_depth=20)
    X, y = check_Xy(X, y)
    n, d = X.shape
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
    trees = []
    oob_sum, oob_cnt = np.zeros(n), np.zeros(n)
    m = max(1, int(round(cfg.bag_fraction * n)))
    for ss in seeds:
        rng = np.random.default_rng(ss)
        if cfg.bootstrap:
            idx = rng.integers(0, n, size=m)
        elif cfg.bag_fraction < 1.0:
            idx = np.sort(rng.choice(n, size=m, replace=False))
        else:
            idx = np.arange(n)
        t = fit_tree(X[idx], y[idx], cfg, _feature_subset(rng, d, cfg.feature_fraction))
        t.leaf_index = None
        trees.append(t)
        out = np.ones(n, bool)
        out[idx] = False
        if out.any():
            oob_sum[out] += t.predict(X[out])
            oob_cnt[out] += 1
    seen = oob_cnt > 0
    oob_r = _pearson(oob_sum[seen] / oob_cnt[seen], y[seen]) if seen.sum() >= 2 else float("nan")
    return ForestModel(trees, d, cfg, oob_r)


def fit_gbt(X, y, cfg: TrainConfig | None = None) -> BoostedModel:
    """Squared-error boosting; leaves are shrunk by ``sum(r) / (n + lam)``."""
    cfg = cfg or TrainConfig(n_trees=45, max_depth=8)
    X, y = check_Xy(X, y)
    n, d = X.shape
    base = float(y.mean())
    pred = np.full(n, base)
    history = [float(np.mean((y - pred) ** 2))]
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        r = y - pred
        if cfg.bag_fraction < 1.0:
            idx = np.sort(rng.choice(n, size=max(1, int(round(cfg.bag_fraction * n))), replace=False))
        else:
            idx = np.arange(n)
        t = fit_tree(X[idx], r[idx], cfg, _feature_subset(rng, d, cfg.feature_fraction))
        # refit leaf values with L2 shrinkage
        ri = r[idx]
        sums = np.bincount(t.leaf_index, weights=ri, minlength=t.n_nodes)
        counts = np.bincount(t.leaf_index, minlength=t.n_nodes)
        leaves = t.feature < 0
        t.value = np.where(leaves, sums / (counts + cfg.lam + (counts == 0)), t.value)
        t.leaf_index = None
        trees.append(t)
        pred = pred + cfg.learning_rate * t.predict(X)
        history.append(float(np.mean((y - pred) ** 2)))
    return BoostedModel(trees, d, cfg, base, history)
