"""Slow, obviously-correct references for the fast split machinery.

Everything here refits from scratch with dense solves; no incremental
updates. The split oracle replicates the fast path's tie-break rules so
agreement is exact, not modulo ties. timing_probe exists to demonstrate
the quasilinear-vs-quadratic growth separation.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dataset import CATEGORICAL, Dataset, from_arrays, linear_feature_set, linear_matrix
from .errors import ConfigError
from .ridge import LeafModel
from .splitter import SplitConfig, best_split_numeric, improves


def ridge_fit_direct(Z: np.ndarray, y: np.ndarray, lam: float) -> LeafModel:
    """Dense solve of (G + lam*J) coef = S."""
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 1:
        raise ConfigError("ridge_fit_direct needs at least one row")
    if lam <= 0:
        raise ConfigError("ridge penalty must be > 0")
    a = Z.T @ Z
    a[np.diag_indices(a.shape[0] - 1)] += lam
    coef = np.linalg.solve(a, Z.T @ y)
    return LeafModel(beta=coef[:-1].copy(), intercept=float(coef[-1]), lam=lam)


def _penalty_tail(p: int, lam: float) -> np.ndarray:
    # sqrt(lam) rows for each penalized coefficient (intercept excluded)
    tail = np.zeros((p - 1, p))
    tail[:, : p - 1] = np.sqrt(lam) * np.eye(p - 1)
    return tail


def _fit_rss(Z: np.ndarray, y: np.ndarray, lam: float,
             tail: np.ndarray | None = None) -> float:
    # ridge as stacked least squares, refit from scratch on the raw rows
    if tail is None:
        tail = _penalty_tail(Z.shape[1], lam)
    coef = np.linalg.lstsq(np.vstack([Z, tail]),
                           np.concatenate([y, np.zeros(tail.shape[0])]),
                           rcond=None)[0]
    resid = y - Z @ coef
    return float(resid @ resid)


@dataclass
class OracleReport:
    kind: str
    left_counts: np.ndarray
    rss: np.ndarray                     # true two-sided RSS per candidate
    best_index: int
    sum_y_sq: float
    thresholds: np.ndarray | None = None
    levels: np.ndarray | None = None

    @property
    def best_rss(self) -> float:
        return float(self.rss[self.best_index])

    @property
    def chosen_threshold(self) -> float:
        return float(self.thresholds[self.best_index])

    @property
    def chosen_level(self) -> int:
        return int(self.levels[self.best_index])


def _pick(rss: np.ndarray, scale: float) -> int:
    best = 0
    for i in range(1, len(rss)):
        if improves(rss[i], rss[best], scale):
            best = i
    return best


def best_split_exhaustive(ds: Dataset, rows, feature: int,
                          cfg: SplitConfig) -> OracleReport | None:
    rows = np.sort(np.asarray(rows, dtype=np.intp))
    col = ds.columns[feature]
    y_rows = ds.response[rows]
    sum_y_sq = float(y_rows @ y_rows)
    mcs = cfg.min_child_size
    n = rows.size

    tail = _penalty_tail(cfg.lin.d_lin + 1, cfg.lam)
    if col.kind == CATEGORICAL:
        codes = col.values[rows]
        Z = linear_matrix(ds, rows, cfg.lin)
        levels, rss, counts = [], [], []
        for level in np.unique(codes):
            mask = codes == level
            n_l = int(mask.sum())
            if n_l < mcs or n - n_l < mcs or n_l == n:
                continue
            total = _fit_rss(Z[mask], y_rows[mask], cfg.lam, tail) + \
                _fit_rss(Z[~mask], y_rows[~mask], cfg.lam, tail)
            levels.append(int(level))
            rss.append(total)
            counts.append(n_l)
        if not levels:
            return None
        rss = np.array(rss)
        return OracleReport(CATEGORICAL, np.array(counts, dtype=np.intp), rss,
                            _pick(rss, sum_y_sq), sum_y_sq,
                            levels=np.array(levels, dtype=np.int64))

    vals = col.values[rows]
    pos = np.argsort(vals, kind="stable")
    sv = vals[pos]
    y = y_rows[pos]
    Z = linear_matrix(ds, rows, cfg.lin)[pos]
    edges = np.flatnonzero(sv[:-1] != sv[1:]) + 1
    valid = edges[(edges >= mcs) & (n - edges >= mcs)]
    if valid.size == 0:
        return None
    rss = np.empty(valid.size)
    thresholds = np.empty(valid.size)
    for i, b in enumerate(valid):
        rss[i] = _fit_rss(Z[:b], y[:b], cfg.lam, tail) + \
            _fit_rss(Z[b:], y[b:], cfg.lam, tail)
        thresholds[i] = 0.5 * (sv[b - 1] + sv[b])
    return OracleReport("numeric", valid, rss, _pick(rss, sum_y_sq), sum_y_sq,
                        thresholds=thresholds)


def timing_probe(n_values, d_lin: int, strategy: str, reps: int = 5,
                 seed: int = 104729) -> list[tuple[int, float]]:
    """Best-of-reps wall time of one full split sweep per n.

    Timing noise is one-sided, so the minimum over repetitions is the
    stable estimate. Rows are passed explicitly so the sweep's own sort
    is included. One warmup call per n precedes the timed repetitions.
    """
    if strategy not in ("fast", "exhaustive"):
        raise ConfigError(f"unknown timing strategy '{strategy}'")
    rng = np.random.default_rng(seed)
    out = []
    for n in n_values:
        X = rng.standard_normal((n, d_lin))
        y = rng.standard_normal(n)
        ds = from_arrays(X, y)
        cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, range(d_lin)))
        rows = np.arange(n)
        if strategy == "fast":
            run = lambda: best_split_numeric(ds, rows, 0, cfg)
        else:
            run = lambda: best_split_exhaustive(ds, rows, 0, cfg)
        run()  # warmup (JIT, caches)
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            run()
            times.append(time.perf_counter() - t0)
        out.append((int(n), float(min(times))))
    return out
