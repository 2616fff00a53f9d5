"""Tree construction with one-step look-ahead CV stopping, and prediction.

A candidate split found by the splitter is only accepted if, under k-fold
cross-validation inside the node, the two child ridge models beat the
single parent ridge model by more than `min_split_gain` of the node's
total variation:

    gain = (RSS_parent - RSS_children) / sum (y_i - ybar)^2 > m

Fold partitions are drawn from a per-node RNG stream seeded by
(tree seed, node path id), so re-building with a different m reuses the
same folds and a larger m yields an exact pruned subtree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, Dataset, LinearFeatureSet, linear_matrix
from .errors import ConfigError
from .ridge import LeafModel, components_from_rows, predict_leaf
from .splitter import SplitCandidate, SplitConfig, best_split_node


@dataclass
class StoppingConfig:
    min_split_gain: float = 0.0
    folds: int = 5
    nodesize_spl: int = 3

    def validate(self):
        if self.min_split_gain < 0:
            raise ConfigError("min_split_gain must be >= 0")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.nodesize_spl < 2:
            raise ConfigError("nodesize_spl must be >= 2")


@dataclass
class TreeParams:
    cfg: SplitConfig
    stop: StoppingConfig
    honest: bool = False
    rng_seed: int = 0


@dataclass
class Leaf:
    model: LeafModel
    n_aggregation: int
    # Honest tree whose aggregation set missed this leaf entirely; the
    # model was fit on the split rows instead so prediction stays total.
    from_split_rows: bool = False


@dataclass
class Internal:
    split: SplitCandidate
    cv_gain: float
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None


TreeNode = Internal | Leaf


def _ridge_coef(Z: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    a = Z.T @ Z
    a[np.diag_indices(a.shape[0] - 1)] += lam
    return np.linalg.solve(a, Z.T @ y)


def split_gain(ds: Dataset, node_rows, left_mask: np.ndarray,
               stop: StoppingConfig, cfg: SplitConfig,
               rng: np.random.Generator) -> float:
    """CV estimate of the R^2 a candidate split adds over the node model.

    `left_mask` is boolean, aligned with `node_rows` positions. Held-out
    rows whose CV cell is empty fall back to the parent model (conservative:
    biases toward rejecting). Returns -inf when the node has no variation.
    """
    node_rows = np.asarray(node_rows, dtype=np.intp)
    n = node_rows.size
    y = ds.response[node_rows]
    tv = float(((y - y.mean()) ** 2).sum())
    if tv <= 0.0:
        return -np.inf
    k = min(stop.folds, n)
    Z = linear_matrix(ds, node_rows, cfg.lin)
    folds = np.array_split(rng.permutation(n), k)
    rss_parent = 0.0
    rss_children = 0.0
    for fold in folds:
        comp = np.ones(n, dtype=bool)
        comp[fold] = False
        coef_p = _ridge_coef(Z[comp], y[comp], cfg.lam)
        pred_p = Z[fold] @ coef_p
        rss_parent += float(((y[fold] - pred_p) ** 2).sum())
        for side in (left_mask, ~left_mask):
            held = fold[side[fold]]
            if held.size == 0:
                continue
            cell = np.flatnonzero(comp & side)
            if cell.size == 0:
                pred = Z[held] @ coef_p
            else:
                coef = _ridge_coef(Z[cell], y[cell], cfg.lam)
                pred = Z[held] @ coef
            rss_children += float(((y[held] - pred) ** 2).sum())
    return (rss_parent - rss_children) / tv


def check_split(ds: Dataset, node_rows, left_mask: np.ndarray,
                stop: StoppingConfig, cfg: SplitConfig,
                rng: np.random.Generator) -> bool:
    return split_gain(ds, node_rows, left_mask, stop, cfg, rng) > stop.min_split_gain


def _goes_left(ds: Dataset, split: SplitCandidate, rows: np.ndarray) -> np.ndarray:
    vals = ds.columns[split.feature].values[rows]
    if split.kind == NUMERIC:
        return vals < split.threshold
    return vals == split.level


def _make_leaf(ds: Dataset, split_rows: np.ndarray, agg_rows: np.ndarray,
               cfg: SplitConfig) -> Leaf:
    rows = agg_rows
    fallback = rows.size == 0
    if fallback:
        rows = split_rows
    comp = components_from_rows(linear_matrix(ds, rows, cfg.lin),
                                ds.response[rows], cfg.lam)
    return Leaf(comp.solve(), int(rows.size), from_split_rows=fallback)


def build_tree(ds: Dataset, split_rows, params: TreeParams,
               feature_sampler=None, agg_rows=None) -> TreeNode:
    """Grow one tree.

    Structure (splits, stopping) is decided on `split_rows` only; leaf
    models are solved on the aggregation rows routed to each leaf. Without
    an explicit `agg_rows` both roles use `split_rows`. `feature_sampler`
    is called once per node with that node's RNG and returns the candidate
    feature indices (defaults to all features).

    Node ids follow the path (root 1, left 2i, right 2i+1) so per-node RNG
    streams depend only on the node's position, not on build order.
    """
    split_rows = np.asarray(split_rows, dtype=np.intp)
    if split_rows.size < 1:
        raise ConfigError("build_tree needs at least one split row")
    params.stop.validate()
    if params.honest and agg_rows is None:
        raise ConfigError("honest trees need a separate aggregation row set")
    agg_rows = split_rows if agg_rows is None else np.asarray(agg_rows, dtype=np.intp)
    sampler = feature_sampler or (lambda rng: np.arange(ds.d_total))
    cfg, stop = params.cfg, params.stop

    root_ref = [None]
    stack = [(1, split_rows, agg_rows, root_ref, 0)]
    while stack:
        node_id, srows, arows, ref, key = stack.pop()
        node = None
        if srows.size >= stop.nodesize_spl:
            node_rng = np.random.default_rng([params.rng_seed, node_id])
            feats = sampler(node_rng)
            cand = best_split_node(ds, srows, feats, cfg)
            if cand is not None:
                mask = _goes_left(ds, cand, srows)
                gain = split_gain(ds, srows, mask, stop, cfg, node_rng)
                if gain > stop.min_split_gain:
                    node = Internal(cand, gain)
                    amask = _goes_left(ds, cand, arows)
                    stack.append((2 * node_id + 1, srows[~mask], arows[~amask],
                                  node, "right"))
                    stack.append((2 * node_id, srows[mask], arows[amask],
                                  node, "left"))
        if node is None:
            node = _make_leaf(ds, srows, arows, cfg)
        if isinstance(ref, list):
            ref[key] = node
        else:
            setattr(ref, key, node)
    return root_ref[0]


def predict_tree(t: TreeNode, x: np.ndarray, lin: LinearFeatureSet) -> float:
    """Route a full feature row (categorical entries as level codes) to its leaf."""
    node = t
    while isinstance(node, Internal):
        s = node.split
        v = x[s.feature]
        if s.kind == NUMERIC:
            node = node.left if v < s.threshold else node.right
        else:
            # unseen levels carry code -1 and never equal a split level
            node = node.left if v == s.level else node.right
    return predict_leaf(node.model, x[np.asarray(lin.indices, dtype=np.intp)])


@dataclass
class TreeAudit:
    depth: int
    node_count: int
    leaf_count: int
    leaf_sizes: list[int] = field(default_factory=list)
    leaf_models: list[LeafModel] = field(default_factory=list)
    gains: list[float] = field(default_factory=list)


def audit_tree(t: TreeNode) -> TreeAudit:
    audit = TreeAudit(0, 0, 0)
    stack = [(t, 0)]
    while stack:
        node, depth = stack.pop()
        audit.node_count += 1
        audit.depth = max(audit.depth, depth)
        if isinstance(node, Leaf):
            audit.leaf_count += 1
            audit.leaf_sizes.append(node.n_aggregation)
            audit.leaf_models.append(node.model)
        else:
            audit.gains.append(node.cv_gain)
            stack.append((node.left, depth + 1))
            stack.append((node.right, depth + 1))
    return audit


def structure_signature(t: TreeNode) -> str:
    """Canonical text of the split structure only (leaf models excluded)."""
    parts: list[str] = []
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            parts.append("leaf")
        else:
            s = node.split
            val = repr(s.threshold) if s.kind == NUMERIC else repr(s.level)
            parts.append(f"split({s.feature},{s.kind},{val})")
            stack.append(node.right)
            stack.append(node.left)
    return ";".join(parts)
