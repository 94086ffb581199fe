"""Gradient-boosted regression trees for binary outcomes (logistic loss).

Exact greedy variance-reduction splits over all features and thresholds;
no subsampling, so training is fully deterministic.  Leaves apply the
standard one-step update sum(g) / sum(|g|(1-|g|)) on the pseudo-residuals
g = y - sigmoid(F).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

_LEAF_DENOM_FLOOR = 1e-12
_PROB_CLIP = 1e-15  # keeps scores strictly inside (0, 1) in floating point


@dataclass
class GbmParams:
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf: int = 2
    seed: int = 0  # reserved; the exact greedy learner has no stochastic step

    def __post_init__(self):
        if self.n_trees < 0:
            raise ValueError("n_trees must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_leaf": self.min_leaf,
            "seed": self.seed,
        }


@dataclass
class GbmModel:
    """init_score plus additive trees; serializable to/from plain JSON."""

    init_score: float
    trees: list[dict]
    params: GbmParams
    train_losses: list[float] = field(default_factory=list)  # stage 0 .. n_trees

    def to_json_dict(self) -> dict:
        return {
            "init_score": self.init_score,
            "params": self.params.to_dict(),
            "trees": self.trees,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, data: dict) -> "GbmModel":
        return cls(
            init_score=float(data["init_score"]),
            trees=list(data["trees"]),
            params=GbmParams(**data["params"]),
        )


def _sigmoid(f: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-f))


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, _PROB_CLIP, 1.0 - _PROB_CLIP)
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean())


def _leaf_value(g: np.ndarray) -> dict:
    denom = (np.abs(g) * (1.0 - np.abs(g))).sum()
    return {"value": float(g.sum() / max(denom, _LEAF_DENOM_FLOOR))}


def _best_split(x: np.ndarray, g: np.ndarray, min_leaf: int):
    """Exact greedy search; returns (gain, feature, threshold) or None.

    Gain is the variance-reduction surrogate S_l^2/m_l + S_r^2/m_r - S^2/m.
    Ties break to the lowest feature index, then the lowest threshold (both
    fall out of first-occurrence argmax over ascending sorts).
    """
    m, _n_feat = x.shape
    order = np.argsort(x, axis=0, kind="stable")
    xs = np.take_along_axis(x, order, axis=0)
    gs = g[order]
    csum = np.cumsum(gs, axis=0)
    total = csum[-1, :]
    m_left = np.arange(1, m, dtype=np.float64)[:, None]
    m_right = m - m_left
    s_left = csum[:-1, :]
    s_right = total[None, :] - s_left
    gains = s_left**2 / m_left + s_right**2 / m_right - (total[None, :] ** 2) / m
    valid = (
        (m_left >= min_leaf)
        & (m_right >= min_leaf)
        & (xs[1:, :] > xs[:-1, :])  # cannot split between equal values
    )
    gains = np.where(valid, gains, -np.inf)
    best_pos = np.argmax(gains, axis=0)  # first max: lowest threshold
    per_feature = gains[best_pos, np.arange(gains.shape[1])]
    j = int(np.argmax(per_feature))  # first max: lowest feature index
    if not per_feature[j] > 0.0:
        return None
    i = int(best_pos[j])
    threshold = (xs[i, j] + xs[i + 1, j]) / 2.0
    return float(per_feature[j]), j, float(threshold)


def _build_tree(x: np.ndarray, g: np.ndarray, depth: int, params: GbmParams) -> dict:
    if depth >= params.max_depth or len(g) < 2 * params.min_leaf:
        return _leaf_value(g)
    split = _best_split(x, g, params.min_leaf)
    if split is None:
        return _leaf_value(g)
    _gain, j, threshold = split
    left = x[:, j] <= threshold
    if not left.any() or left.all():  # midpoint rounding degeneracy
        return _leaf_value(g)
    return {
        "feature": j,
        "threshold": threshold,
        "left": _build_tree(x[left], g[left], depth + 1, params),
        "right": _build_tree(x[~left], g[~left], depth + 1, params),
    }


def _eval_tree(node: dict, x: np.ndarray) -> np.ndarray:
    """Vectorized routing of a (n, k) batch through one tree."""
    out = np.empty(x.shape[0])
    stack = [(node, np.arange(x.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if "value" in nd:
            out[idx] = nd["value"]
            continue
        mask = x[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[mask]))
        stack.append((nd["right"], idx[~mask]))
    return out


def gbm_train(x: np.ndarray, y: np.ndarray, params: GbmParams | None = None) -> GbmModel:
    """Fit the boosted ensemble; records the per-stage training log loss."""
    params = params or GbmParams()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("x and y must align")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if not set(np.unique(y)) == {0.0, 1.0}:
        raise ValueError("need both classes present with labels in {0, 1}")
    prevalence = y.mean()
    init = float(np.log(prevalence / (1.0 - prevalence)))
    f = np.full(len(y), init)
    losses = [_log_loss(y, _sigmoid(f))]
    trees: list[dict] = []
    for _ in range(params.n_trees):
        g = y - _sigmoid(f)
        tree = _build_tree(x, g, 0, params)
        trees.append(tree)
        f = f + params.learning_rate * _eval_tree(tree, x)
        losses.append(_log_loss(y, _sigmoid(f)))
    return GbmModel(init_score=init, trees=trees, params=params, train_losses=losses)


def gbm_raw_score(model: GbmModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    f = np.full(x.shape[0], model.init_score)
    for tree in model.trees:
        f = f + model.params.learning_rate * _eval_tree(tree, x)
    return f[0] if single else f


def gbm_predict(model: GbmModel, x: np.ndarray):
    """Probability of the positive class, strictly inside (0, 1)."""
    p = _sigmoid(np.asarray(gbm_raw_score(model, x)))
    clipped = np.clip(p, _PROB_CLIP, 1.0 - _PROB_CLIP)
    return float(clipped) if clipped.ndim == 0 else clipped
