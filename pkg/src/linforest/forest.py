"""Forest training, prediction, evaluation, and .lrf serialization.

Each tree draws ceil(sample_fraction * n) rows with replacement from a
per-tree RNG stream; honest trees then split the distinct drawn rows into
a structure (split) set and an aggregation set. Trees may build on a
thread pool; results are collected in tree-index order so the forest is a
pure function of (data, params).
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import (CATEGORICAL, NUMERIC, Column, Dataset, LinearFeatureSet,
                      linear_feature_set)
from .errors import ConfigError, DataError
from .ridge import LeafModel
from .splitter import SplitCandidate, SplitConfig
from .tree import (Internal, Leaf, StoppingConfig, TreeNode, TreeParams,
                   build_tree, predict_tree)

FORMAT_NAME = "lrf"
FORMAT_VERSION = 1


@dataclass
class HyperParams:
    ntree: int = 100
    mtry: int | None = None            # None: all features
    overfit_penalty: float = 1e-8
    min_split_gain: float = 0.005
    folds: int = 5
    nodesize_spl: int = 3
    sample_fraction: float = 1.0
    splitratio: float = 0.5
    honest: bool = False
    lin_features: tuple[int, ...] | None = None   # None: all numeric columns
    seed: int = 0


@dataclass
class TreeRecord:
    root: TreeNode
    split_rows: np.ndarray
    agg_rows: np.ndarray


@dataclass
class Forest:
    trees: list[TreeRecord]
    params: HyperParams
    schema: list[dict]          # per feature: name, kind, levels
    response_name: str
    n_train: int
    lin: LinearFeatureSet

    @property
    def roots(self) -> list[TreeNode]:
        return [t.root for t in self.trees]


def _resolve_lin(ds: Dataset, hp: HyperParams) -> LinearFeatureSet:
    if hp.lin_features is not None:
        return linear_feature_set(ds, hp.lin_features)
    numeric = [i for i, c in enumerate(ds.columns) if c.kind == NUMERIC]
    if not numeric:
        raise ConfigError("dataset has no numeric feature for the leaf models")
    return linear_feature_set(ds, numeric)


def validate_params(ds: Dataset, hp: HyperParams) -> LinearFeatureSet:
    if hp.ntree < 1:
        raise ConfigError("ntree must be >= 1")
    mtry = ds.d_total if hp.mtry is None else hp.mtry
    if not 1 <= mtry <= ds.d_total:
        raise ConfigError(f"mtry must be in [1, {ds.d_total}]")
    if hp.overfit_penalty <= 0:
        raise ConfigError("overfit_penalty must be > 0")
    if hp.min_split_gain < 0:
        raise ConfigError("min_split_gain must be >= 0")
    if hp.folds < 2:
        raise ConfigError("folds must be >= 2")
    if hp.nodesize_spl < 2:
        raise ConfigError("nodesize_spl must be >= 2")
    if not 0 < hp.sample_fraction <= 1:
        raise ConfigError("sample_fraction must be in (0, 1]")
    if not 0 < hp.splitratio <= 1:
        raise ConfigError("splitratio must be in (0, 1]")
    if hp.honest and hp.splitratio >= 1:
        raise ConfigError("honest training requires splitratio < 1")
    if ds.n < 2 * hp.nodesize_spl:
        raise ConfigError("too few rows for the requested nodesize_spl")
    return _resolve_lin(ds, hp)


def _tree_seed(master: int, index: int) -> int:
    # Stated mixing function: SeedSequence spreads (seed, tree) into one word.
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def _schema_of(ds: Dataset) -> list[dict]:
    out = []
    for c in ds.columns:
        entry = {"name": c.name, "kind": c.kind}
        if c.kind == CATEGORICAL:
            entry["levels"] = list(c.levels)
        out.append(entry)
    return out


def train_forest(ds: Dataset, hp: HyperParams, n_threads: int | None = None) -> Forest:
    lin = validate_params(ds, hp)
    mtry = ds.d_total if hp.mtry is None else hp.mtry
    cfg = SplitConfig(lam=hp.overfit_penalty, lin=lin, min_child_size=1)
    stop = StoppingConfig(min_split_gain=hp.min_split_gain, folds=hp.folds,
                          nodesize_spl=hp.nodesize_spl)
    n = ds.n
    n_draw = math.ceil(hp.sample_fraction * n)

    def sampler(rng: np.random.Generator) -> np.ndarray:
        return rng.choice(ds.d_total, size=mtry, replace=False)

    def build_one(t: int) -> TreeRecord:
        rng = np.random.default_rng([hp.seed, t])
        draw = np.sort(rng.integers(0, n, size=n_draw))
        if hp.honest:
            distinct = np.unique(draw)
            perm = rng.permutation(distinct.size)
            n_split = max(1, int(hp.splitratio * distinct.size))
            n_split = min(n_split, distinct.size - 1)
            split_rows = np.sort(distinct[perm[:n_split]])
            agg_rows = np.sort(distinct[perm[n_split:]])
        else:
            split_rows = draw
            agg_rows = draw
        params = TreeParams(cfg=cfg, stop=stop, honest=hp.honest,
                            rng_seed=_tree_seed(hp.seed, t))
        root = build_tree(ds, split_rows, params, feature_sampler=sampler,
                          agg_rows=agg_rows if hp.honest else None)
        return TreeRecord(root, split_rows, agg_rows)

    if n_threads is None:
        n_threads = os.cpu_count() or 1
    if n_threads <= 1 or hp.ntree == 1:
        records = [build_one(t) for t in range(hp.ntree)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            records = list(pool.map(build_one, range(hp.ntree)))
    return Forest(records, hp, _schema_of(ds), ds.response_name, n, lin)


# ---------------------------------------------------------------------------
# prediction


def model_matrix(f: Forest, ds: Dataset) -> np.ndarray:
    """Feature matrix in the model's column order and level coding.

    Categorical labels unseen at training time get code -1, which no split
    level equals, so such rows route to the not-equal side.
    """
    cols = []
    for entry in f.schema:
        name = entry["name"]
        try:
            idx = ds.column_index(name)
        except DataError:
            raise DataError(f"input is missing column '{name}'") from None
        col = ds.columns[idx]
        if col.kind != entry["kind"]:
            raise DataError(f"column '{name}' is {col.kind}, expected "
                            f"{entry['kind']}")
        if entry["kind"] == CATEGORICAL:
            remap = {lbl: code for code, lbl in enumerate(entry["levels"])}
            cols.append(np.array([remap.get(col.levels[c], -1)
                                  for c in col.values], dtype=np.float64))
        else:
            cols.append(col.values.astype(np.float64))
    return np.column_stack(cols)


def predict_row(f: Forest, x: np.ndarray) -> float:
    total = 0.0
    for rec in f.trees:
        total += predict_tree(rec.root, x, f.lin)
    return total / len(f.trees)


def predict(f: Forest, ds: Dataset) -> np.ndarray:
    X = model_matrix(f, ds)
    return np.array([predict_row(f, X[i]) for i in range(X.shape[0])])


def evaluate(f: Forest, test: Dataset) -> dict:
    if test.n == 0:
        raise DataError("empty test set")
    resid = test.response - predict(f, test)
    mse = float(np.mean(resid ** 2))
    return {"rmse": math.sqrt(mse), "mse": mse, "n_test": test.n}


# ---------------------------------------------------------------------------
# serialization (.lrf): versioned JSON, floats in round-trip repr form


def _flatten_tree(root: TreeNode) -> list[dict]:
    nodes: list[dict] = []
    stack: list[tuple[TreeNode, int | None, str | None]] = [(root, None, None)]
    while stack:
        node, parent, side = stack.pop()
        idx = len(nodes)
        if parent is not None:
            nodes[parent][side] = idx
        if isinstance(node, Leaf):
            nodes.append({"type": "leaf",
                          "beta": [float(b) for b in node.model.beta],
                          "intercept": float(node.model.intercept),
                          "n_aggregation": node.n_aggregation,
                          "from_split_rows": node.from_split_rows})
        else:
            s = node.split
            entry = {"type": "split", "feature": s.feature, "kind": s.kind,
                     "score": float(s.score), "cv_gain": float(node.cv_gain),
                     "left_count": s.left_count, "right_count": s.right_count,
                     "left": None, "right": None}
            if s.kind == NUMERIC:
                entry["threshold"] = float(s.threshold)
            else:
                entry["level"] = int(s.level)
            nodes.append(entry)
            stack.append((node.right, idx, "right"))
            stack.append((node.left, idx, "left"))
    return nodes


def _unflatten_tree(nodes: list[dict], lam: float) -> TreeNode:
    built: list[TreeNode | None] = [None] * len(nodes)
    for idx in range(len(nodes) - 1, -1, -1):
        raw = nodes[idx]
        if raw["type"] == "leaf":
            model = LeafModel(np.array(raw["beta"], dtype=np.float64),
                              raw["intercept"], lam)
            built[idx] = Leaf(model, raw["n_aggregation"],
                              raw["from_split_rows"])
        else:
            cand = SplitCandidate(feature=raw["feature"], kind=raw["kind"],
                                  score=raw["score"],
                                  left_count=raw["left_count"],
                                  right_count=raw["right_count"],
                                  threshold=raw.get("threshold"),
                                  level=raw.get("level"))
            built[idx] = Internal(cand, raw["cv_gain"],
                                  built[raw["left"]], built[raw["right"]])
    return built[0]


def forest_to_document(f: Forest) -> dict:
    hp = f.params
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "params": {
            "ntree": hp.ntree, "mtry": hp.mtry,
            "overfit_penalty": hp.overfit_penalty,
            "min_split_gain": hp.min_split_gain, "folds": hp.folds,
            "nodesize_spl": hp.nodesize_spl,
            "sample_fraction": hp.sample_fraction,
            "splitratio": hp.splitratio, "honest": hp.honest,
            "lin_features": list(f.lin.indices), "seed": hp.seed,
        },
        "schema": {"features": f.schema, "response": f.response_name,
                   "n_train": f.n_train},
        "trees": [{"nodes": _flatten_tree(rec.root),
                   "split_rows": [int(r) for r in rec.split_rows],
                   "agg_rows": [int(r) for r in rec.agg_rows]}
                  for rec in f.trees],
    }


def save_forest(f: Forest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_document(f), fh, indent=1)
        fh.write("\n")


def load_forest(path) -> Forest:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise DataError(f"cannot open '{path}': {e}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"'{path}' is not a valid model file: {e}") from None
    if doc.get("format") != FORMAT_NAME:
        raise DataError(f"'{path}' is not a {FORMAT_NAME} model file")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported model version {doc.get('version')}")
    p = doc["params"]
    hp = HyperParams(ntree=p["ntree"], mtry=p["mtry"],
                     overfit_penalty=p["overfit_penalty"],
                     min_split_gain=p["min_split_gain"], folds=p["folds"],
                     nodesize_spl=p["nodesize_spl"],
                     sample_fraction=p["sample_fraction"],
                     splitratio=p["splitratio"], honest=p["honest"],
                     lin_features=tuple(p["lin_features"]), seed=p["seed"])
    records = [TreeRecord(_unflatten_tree(t["nodes"], hp.overfit_penalty),
                          np.array(t["split_rows"], dtype=np.intp),
                          np.array(t["agg_rows"], dtype=np.intp))
               for t in doc["trees"]]
    lin = LinearFeatureSet(tuple(p["lin_features"]))
    return Forest(records, hp, doc["schema"]["features"],
                  doc["schema"]["response"], doc["schema"]["n_train"], lin)
