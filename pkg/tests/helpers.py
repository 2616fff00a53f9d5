"""Shared test utilities: instance generators, comparisons, DOT grammar."""
from __future__ import annotations

import numpy as np
import pyparsing as pp

from linforest import from_arrays, linear_feature_set
from linforest.dataset import CATEGORICAL, Column, Dataset
from linforest.splitter import SplitConfig
from linforest.tree import Leaf


def rel_close(a: float, b: float, tol: float, scale: float = 0.0) -> bool:
    """|a-b| within tol relative to max(|a|, |b|, scale).

    `scale` guards candidates whose RSS is a tiny difference of large
    phi/sum-y^2 terms; the natural problem scale there is sum(y^2).
    """
    return abs(a - b) <= tol * max(abs(a), abs(b), scale)


def random_numeric_instance(rng: np.random.Generator, with_ties: bool = False,
                            n: int | None = None, d_lin: int | None = None,
                            lam: float | None = None):
    """Random (ds, rows, feature, cfg) for split-oracle comparisons."""
    if n is None:
        n = int(rng.integers(10, 201))
    if d_lin is None:
        d_lin = int(rng.integers(1, 6))
    if lam is None:
        lam = float(rng.choice([0.1, 1.0, 10.0]))
    X = rng.standard_normal((n, d_lin))
    if with_ties:
        pool = np.round(rng.standard_normal(max(2, n // 5)), 1)
        X[:, 0] = rng.choice(pool, size=n)
    w = rng.standard_normal(d_lin)
    y = X @ w + rng.standard_normal(n)
    if with_ties and rng.random() < 0.5:
        y = np.round(y, 1)  # response ties as well
    ds = from_arrays(X, y)
    cfg = SplitConfig(lam=lam, lin=linear_feature_set(ds, range(d_lin)),
                      min_child_size=int(rng.integers(1, 4)))
    rows = np.arange(n)
    if rng.random() < 0.3:
        rows = rng.choice(n, size=int(rng.integers(10, n + 1)), replace=True)
    return ds, rows, 0, cfg


def random_categorical_instance(rng: np.random.Generator):
    """Random (ds, rows, feature, cfg) with one categorical split feature."""
    n = int(rng.integers(12, 120))
    d_lin = int(rng.integers(1, 4))
    n_levels = int(rng.integers(2, 6))
    X = rng.standard_normal((n, d_lin))
    codes = rng.integers(0, n_levels, size=n).astype(np.int64)
    shift = rng.standard_normal(n_levels) * 2
    y = X @ rng.standard_normal(d_lin) + shift[codes] + rng.standard_normal(n)
    cols = [Column(f"X{j + 1}", "numeric", np.ascontiguousarray(X[:, j]))
            for j in range(d_lin)]
    labels = tuple(chr(ord("a") + i) for i in range(n_levels))
    cols.append(Column("cat", CATEGORICAL, codes, labels))
    ds = Dataset(cols, y)
    cfg = SplitConfig(lam=float(rng.choice([0.1, 1.0, 10.0])),
                      lin=linear_feature_set(ds, range(d_lin)),
                      min_child_size=int(rng.integers(1, 3)))
    return ds, np.arange(n), d_lin, cfg


def is_pruned_subtree(big, small) -> bool:
    """True when `small` equals `big` with some subtrees collapsed to leaves."""
    if isinstance(small, Leaf):
        return True
    if isinstance(big, Leaf):
        return False
    b, s = big.split, small.split
    if (b.feature, b.kind, b.threshold, b.level) != \
            (s.feature, s.kind, s.threshold, s.level):
        return False
    return is_pruned_subtree(big.left, small.left) and \
        is_pruned_subtree(big.right, small.right)


def node_count(t) -> int:
    if isinstance(t, Leaf):
        return 1
    return 1 + node_count(t.left) + node_count(t.right)


def _dot_grammar() -> pp.ParserElement:
    identifier = pp.Word(pp.alphanums + "_")
    quoted = pp.QuotedString('"', esc_char="\\")
    name = identifier | quoted
    attr = pp.Group(name + pp.Suppress("=") + name)
    attr_list = pp.Suppress("[") + pp.Optional(pp.DelimitedList(attr)) + pp.Suppress("]")
    node_stmt = name + pp.Optional(attr_list)
    edge_stmt = name + pp.Suppress("->") + name + pp.Optional(attr_list)
    stmt = (edge_stmt | node_stmt) + pp.Suppress(";")
    graph = pp.Suppress(pp.Keyword("digraph")) + pp.Optional(name) + \
        pp.Suppress("{") + pp.ZeroOrMore(stmt) + pp.Suppress("}")
    return graph


DOT_GRAMMAR = _dot_grammar()


def assert_valid_dot(text: str) -> None:
    DOT_GRAMMAR.parse_string(text, parse_all=True)
