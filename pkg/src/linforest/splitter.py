"""Best-split search for one node.

Numeric features: sort once, then sweep distinct-value blocks left to
right, moving each block between the running left/right ridge components
(rank-one updates) and scoring phi_L + phi_R at every admissible boundary.
Categorical features: one-vs-rest per level, with the rest side obtained
by differencing from the node totals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, Dataset, LinearFeatureSet, linear_matrix
from .errors import ConfigError
from .ridge import components_from_rows, rss_pair

# Mathematically tied scores land within rounding noise of each other, and
# the tie-break rules (smallest threshold / level / feature index) must
# resolve identically in the fast path and the refit oracle. A candidate
# therefore only beats the incumbent when it improves by more than this
# fraction of the node's sum of squared responses.
TIE_REL_EPS = 1e-10


@dataclass
class SplitConfig:
    lam: float
    lin: LinearFeatureSet
    min_child_size: int = 1


@dataclass
class SplitCandidate:
    feature: int
    kind: str                    # NUMERIC or CATEGORICAL
    score: float                 # phi_L + phi_R
    left_count: int
    right_count: int
    threshold: float | None = None   # numeric splits: value < threshold -> left
    level: int | None = None         # categorical splits: code == level -> left


@dataclass
class SweepProfile:
    """Scores for every admissible boundary of one feature, in sweep order."""

    left_counts: np.ndarray
    scores: np.ndarray
    thresholds: np.ndarray | None = None   # numeric
    levels: np.ndarray | None = None       # categorical
    sum_y_sq: float = 0.0


def improves(new: float, best: float, scale: float) -> bool:
    return new < best - TIE_REL_EPS * scale


def _pick_min(profile: SweepProfile) -> int:
    best = 0
    for i in range(1, len(profile.scores)):
        if improves(profile.scores[i], profile.scores[best], profile.sum_y_sq):
            best = i
    return best


def numeric_split_scores(ds: Dataset, rows, feature: int,
                         cfg: SplitConfig) -> SweepProfile:
    # canonical row order makes the sweep invariant to input permutation
    rows = np.sort(np.asarray(rows, dtype=np.intp))
    vals = ds.columns[feature].values[rows]
    pos = np.argsort(vals, kind="stable")
    sv = vals[pos]
    y = ds.response[rows][pos]
    sum_y_sq = float(y @ y)
    n = rows.size
    # boundary after position b-1 <=> left side of size b; one per block edge
    edges = np.flatnonzero(sv[:-1] != sv[1:]) + 1
    mcs = cfg.min_child_size
    valid = edges[(edges >= mcs) & (n - edges >= mcs)]
    if valid.size == 0:
        return SweepProfile(np.empty(0, dtype=np.intp), np.empty(0),
                            thresholds=np.empty(0), sum_y_sq=sum_y_sq)
    Z = linear_matrix(ds, rows, cfg.lin)[pos]
    first = edges[0]
    left = components_from_rows(Z[:first], y[:first], cfg.lam)
    right = components_from_rows(Z[first:], y[first:], cfg.lam)
    scores = np.empty(valid.size)
    thresholds = np.empty(valid.size)
    out = 0
    at = first
    for b in edges:
        while at < b:
            left.add(Z[at], y[at])
            right.remove(Z[at], y[at])
            at += 1
        if b >= mcs and n - b >= mcs:
            scores[out] = rss_pair(left, right)
            thresholds[out] = 0.5 * (sv[b - 1] + sv[b])
            out += 1
    return SweepProfile(valid, scores, thresholds=thresholds, sum_y_sq=sum_y_sq)


def best_split_numeric(ds: Dataset, rows, feature: int,
                       cfg: SplitConfig) -> SplitCandidate | None:
    profile = numeric_split_scores(ds, rows, feature, cfg)
    if profile.scores.size == 0:
        return None
    i = _pick_min(profile)
    b = int(profile.left_counts[i])
    return SplitCandidate(feature, NUMERIC, float(profile.scores[i]),
                          b, len(np.asarray(rows)) - b,
                          threshold=float(profile.thresholds[i]))


def _phi_direct(g: np.ndarray, s: np.ndarray, lam: float) -> float:
    a = g.copy()
    a[np.diag_indices(a.shape[0] - 1)] += lam
    v = np.linalg.solve(a, s)
    return float(v @ g @ v - 2.0 * (s @ v))


def categorical_split_scores(ds: Dataset, rows, feature: int,
                             cfg: SplitConfig) -> SweepProfile:
    rows = np.sort(np.asarray(rows, dtype=np.intp))
    codes = ds.columns[feature].values[rows]
    y = ds.response[rows]
    sum_y_sq = float(y @ y)
    n = rows.size
    present = np.unique(codes)
    empty = SweepProfile(np.empty(0, dtype=np.intp), np.empty(0),
                         levels=np.empty(0, dtype=np.int64), sum_y_sq=sum_y_sq)
    if present.size < 2:
        return empty
    Z = linear_matrix(ds, rows, cfg.lin)
    g_total = Z.T @ Z
    s_total = Z.T @ y
    mcs = cfg.min_child_size
    levels, scores, counts = [], [], []
    for level in present:
        mask = codes == level
        n_l = int(mask.sum())
        if n_l < mcs or n - n_l < mcs:
            continue
        Zl = Z[mask]
        g_l = Zl.T @ Zl
        s_l = Zl.T @ y[mask]
        score = _phi_direct(g_l, s_l, cfg.lam) + \
            _phi_direct(g_total - g_l, s_total - s_l, cfg.lam)
        levels.append(int(level))
        scores.append(score)
        counts.append(n_l)
    if not levels:
        return empty
    return SweepProfile(np.array(counts, dtype=np.intp), np.array(scores),
                        levels=np.array(levels, dtype=np.int64),
                        sum_y_sq=sum_y_sq)


def best_split_categorical(ds: Dataset, rows, feature: int,
                           cfg: SplitConfig) -> SplitCandidate | None:
    profile = categorical_split_scores(ds, rows, feature, cfg)
    if profile.scores.size == 0:
        return None
    i = _pick_min(profile)
    b = int(profile.left_counts[i])
    return SplitCandidate(feature, CATEGORICAL, float(profile.scores[i]),
                          b, len(np.asarray(rows)) - b,
                          level=int(profile.levels[i]))


def best_split_node(ds: Dataset, rows, candidate_features,
                    cfg: SplitConfig) -> SplitCandidate | None:
    """Minimum-score split over the candidate features.

    Features are scanned in ascending index order so score ties resolve to
    the smallest feature index; duplicates in the list are redundant.
    """
    feats = np.unique(np.asarray(candidate_features, dtype=np.intp))
    if feats.size == 0:
        raise ConfigError("no candidate features supplied")
    rows = np.asarray(rows, dtype=np.intp)
    y = ds.response[rows]
    scale = float(y @ y)
    best: SplitCandidate | None = None
    for f in feats:
        kind = ds.columns[f].kind
        if kind == NUMERIC:
            cand = best_split_numeric(ds, rows, int(f), cfg)
        else:
            cand = best_split_categorical(ds, rows, int(f), cfg)
        if cand is None:
            continue
        if best is None or improves(cand.score, best.score, scale):
            best = cand
    return best
