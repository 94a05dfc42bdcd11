"""CART regression trees and the random-forest / gradient-boosting ensembles built on them."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import Dataset, NormStats, fit_norm, normalize_features


@dataclass
class TreeNode:
    value: float
    feature: int = -1
    threshold: float = math.nan
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    n_samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def n_leaves(self) -> int:
        if self.is_leaf:
            return 1
        return self.left.n_leaves() + self.right.n_leaves()

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value, "n": self.n_samples}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "value": self.value,
            "n": self.n_samples,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "left" not in d:
            return cls(value=float(d["value"]), n_samples=int(d.get("n", 0)))
        return cls(
            value=float(d["value"]),
            feature=int(d["feature"]),
            threshold=float(d["threshold"]),
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
            n_samples=int(d.get("n", 0)),
        )


def _best_split(X, y, features, min_samples_leaf):
    """Exhaustive variance-reduction search; returns (sse, feature, threshold) or None."""
    n = y.size
    yc = y - y.mean()
    best = None
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = yc[order]
        csum = np.cumsum(ys)[:-1]
        csq = np.cumsum(ys * ys)[:-1]
        total, total_sq = csum[-1] + ys[-1], csq[-1] + ys[-1] ** 2
        n_left = np.arange(1, n)
        n_right = n - n_left
        sse = (csq - csum**2 / n_left) + (
            (total_sq - csq) - (total - csum) ** 2 / n_right
        )
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
        if not valid.any():
            continue
        sse = np.where(valid, sse, np.inf)
        i = int(np.argmin(sse))
        if best is None or sse[i] < best[0]:
            best = (float(sse[i]), int(j), 0.5 * (xs[i] + xs[i + 1]))
    return best


def fit_tree(
    X,
    y,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    features_per_split: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeNode:
    """Grow a least-squares regression tree greedily.

    Rows with ``x[feature] <= threshold`` go left.  ``features_per_split``
    draws a fresh random feature subset at every node (requires ``rng``);
    ``None`` searches all features.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size or y.size == 0:
        raise ValueError(f"need non-empty (n, d) rows and n targets; got {X.shape}, {y.shape}")
    d = X.shape[1]
    k = d if features_per_split is None else min(int(features_per_split), d)
    if k < d and rng is None:
        raise ValueError("features_per_split < n_features requires an rng")

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        ys = y[idx]
        node = TreeNode(value=float(ys.mean()), n_samples=idx.size)
        if max_depth is not None and depth >= max_depth:
            return node
        if idx.size < 2 * min_samples_leaf:
            return node
        parent_sse = float(np.sum((ys - ys.mean()) ** 2))
        if parent_sse <= 1e-24 * max(1.0, float(np.sum(ys * ys))):
            return node
        features = np.arange(d) if k == d else np.sort(rng.choice(d, size=k, replace=False))
        split = _best_split(X[idx], ys, features, min_samples_leaf)
        if split is None or not split[0] < parent_sse:
            return node
        _, j, thr = split
        mask = X[idx, j] <= thr
        node.feature, node.threshold = j, float(thr)
        node.left = grow(idx[mask], depth + 1)
        node.right = grow(idx[~mask], depth + 1)
        return node

    return grow(np.arange(y.size), 0)


def predict_tree(node: TreeNode, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    out = np.empty(X.shape[0])

    def route(n: TreeNode, idx: np.ndarray):
        if idx.size == 0:
            return
        if n.is_leaf:
            out[idx] = n.value
            return
        mask = X[idx, n.feature] <= n.threshold
        route(n.left, idx[mask])
        route(n.right, idx[~mask])

    route(node, np.arange(X.shape[0]))
    return out


# -- ensembles --------------------------------------------------------------


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 8
    min_samples_leaf: int = 1
    features_per_split: int | None = 3  # ceil(sqrt(7))
    bootstrap: bool = True
    seed: int = 0

    def validate(self) -> "ForestConfig":
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("n_trees, max_depth and min_samples_leaf must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")
        return self


@dataclass(frozen=True)
class GbmConfig:
    n_rounds: int = 200
    learning_rate: float = 0.05
    max_depth: int | None = 3
    min_samples_leaf: int = 1
    subsample: float = 1.0
    seed: int = 0

    def validate(self) -> "GbmConfig":
        if not 0 < self.learning_rate <= 1:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must be in (0, 1]")
        return self


def _features(dataset_or_X, norm: NormStats | None) -> np.ndarray:
    X = dataset_or_X.features if isinstance(dataset_or_X, Dataset) else np.asarray(dataset_or_X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return normalize_features(X, norm) if norm is not None else X


@dataclass
class RandomForestModel:
    trees: list[TreeNode]
    norm: NormStats | None = None

    def tree_predictions(self, data) -> np.ndarray:
        X = _features(data, self.norm)
        return np.vstack([predict_tree(t, X) for t in self.trees])

    def predict(self, data) -> np.ndarray:
        return self.tree_predictions(data).mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "kind": "random_forest",
            "norm": self.norm.to_dict() if self.norm is not None else None,
            "trees": [t.to_dict() for t in self.trees],
        }


@dataclass
class GbmModel:
    base: float
    learning_rate: float
    trees: list[TreeNode] = field(default_factory=list)
    norm: NormStats | None = None

    def staged_predict(self, data):
        """Yield the ensemble prediction after 0, 1, ..., n_rounds rounds."""
        X = _features(data, self.norm)
        f = np.full(X.shape[0], self.base)
        yield f.copy()
        for t in self.trees:
            f += self.learning_rate * predict_tree(t, X)
            yield f.copy()

    def predict(self, data) -> np.ndarray:
        X = _features(data, self.norm)
        f = np.full(X.shape[0], self.base)
        for t in self.trees:
            f += self.learning_rate * predict_tree(t, X)
        return f

    def to_dict(self) -> dict:
        return {
            "kind": "gbm",
            "base": self.base,
            "learning_rate": self.learning_rate,
            "norm": self.norm.to_dict() if self.norm is not None else None,
            "trees": [t.to_dict() for t in self.trees],
        }


def _xy(dataset: Dataset, normalize: bool):
    if len(dataset) == 0:
        raise ValueError("cannot fit on an empty dataset")
    norm = fit_norm(dataset) if normalize else None
    return _features(dataset, norm), dataset.targets, norm


def fit_random_forest(dataset: Dataset, cfg: ForestConfig = ForestConfig(), normalize: bool = True) -> RandomForestModel:
    cfg.validate()
    X, y, norm = _xy(dataset, normalize)
    n = y.size
    trees = []
    # one independent stream per tree, so tree k is the same however trees are scheduled
    for seq in np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees):
        rng = np.random.Generator(np.random.PCG64(seq))
        idx = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        trees.append(
            fit_tree(X[idx], y[idx], cfg.max_depth, cfg.min_samples_leaf, cfg.features_per_split, rng)
        )
    return RandomForestModel(trees, norm)


def fit_gbm(dataset: Dataset, cfg: GbmConfig = GbmConfig(), normalize: bool = True) -> GbmModel:
    """Least-squares boosting: each round fits a tree to the current residuals."""
    cfg.validate()
    X, y, norm = _xy(dataset, normalize)
    model = GbmModel(base=float(y.mean()), learning_rate=cfg.learning_rate, norm=norm)
    f = np.full(y.size, model.base)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    for _ in range(cfg.n_rounds):
        resid = y - f
        if cfg.subsample < 1.0:
            m = max(1, int(round(cfg.subsample * y.size)))
            idx = np.sort(rng.choice(y.size, size=m, replace=False))
        else:
            idx = np.arange(y.size)
        tree = fit_tree(X[idx], resid[idx], cfg.max_depth, cfg.min_samples_leaf)
        model.trees.append(tree)
        f += cfg.learning_rate * predict_tree(tree, X)
    return model


def save_model(model: RandomForestModel | GbmModel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh)
        fh.write("\n")


def load_model(path: str | Path) -> RandomForestModel | GbmModel:
    with open(path) as fh:
        d = json.load(fh)
    norm = NormStats.from_dict(d["norm"]) if d.get("norm") else None
    trees = [TreeNode.from_dict(t) for t in d["trees"]]
    if d["kind"] == "random_forest":
        return RandomForestModel(trees, norm)
    if d["kind"] == "gbm":
        return GbmModel(float(d["base"]), float(d["learning_rate"]), trees, norm)
    raise ValueError(f"unknown model kind {d['kind']!r}")
