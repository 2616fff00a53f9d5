import numpy as np
import pytest

from helpers import rel_close
from linforest.dataset import (CATEGORICAL, Column, Dataset, from_arrays,
                               linear_feature_set)
from linforest.errors import ConfigError
from linforest.ridge import OPS
from linforest.splitter import (TIE_REL_EPS, SplitConfig,
                                best_split_categorical, best_split_node,
                                best_split_numeric, categorical_split_scores,
                                improves, numeric_split_scores)


def step_dataset():
    """Four points with an unmistakable break between x=2 and x=3."""
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0.0, 0.0, 10.0, 10.0])
    ds = from_arrays(X, y)
    cfg = SplitConfig(lam=1e-6, lin=linear_feature_set(ds, [0]))
    return ds, cfg


def test_step_profile_hand_values():
    ds, cfg = step_dataset()
    profile = numeric_split_scores(ds, np.arange(4), 0, cfg)
    assert np.array_equal(profile.left_counts, [1, 2, 3])
    assert np.array_equal(profile.thresholds, [1.5, 2.5, 3.5])
    rss = profile.scores + profile.sum_y_sq
    # outer boundaries leave a 3-point side with residual 50/3 each
    assert rss[0] == pytest.approx(50.0 / 3.0, rel=1e-4)
    assert abs(rss[1]) < 1e-4
    assert rss[2] == pytest.approx(50.0 / 3.0, rel=1e-4)


def test_step_best_split():
    ds, cfg = step_dataset()
    cand = best_split_numeric(ds, np.arange(4), 0, cfg)
    assert cand.threshold == 2.5
    assert (cand.left_count, cand.right_count) == (2, 2)
    assert cand.kind == "numeric"


def test_min_child_size_filters_boundaries():
    ds, _ = step_dataset()
    cfg = SplitConfig(lam=1e-6, lin=linear_feature_set(ds, [0]),
                      min_child_size=2)
    profile = numeric_split_scores(ds, np.arange(4), 0, cfg)
    assert np.array_equal(profile.thresholds, [2.5])


def test_tied_values_move_as_one_block():
    X = np.array([[1.0], [1.0], [2.0], [2.0]])
    ds = from_arrays(X, np.array([0.0, 1.0, 5.0, 6.0]))
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0]))
    profile = numeric_split_scores(ds, np.arange(4), 0, cfg)
    # a boundary inside a tied block is not a real boundary
    assert np.array_equal(profile.thresholds, [1.5])
    assert np.array_equal(profile.left_counts, [2])


def test_constant_feature_has_no_split():
    X = np.ones((5, 1))
    ds = from_arrays(X, np.arange(5.0))
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0]))
    assert best_split_numeric(ds, np.arange(5), 0, cfg) is None


def test_sweep_invariant_to_row_permutation():
    rng = np.random.default_rng(23)
    X = rng.integers(0, 8, size=(60, 2)).astype(np.float64)
    y = rng.standard_normal(60)
    ds = from_arrays(X, y)
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0, 1]))
    rows = rng.choice(60, size=45, replace=True)
    base = numeric_split_scores(ds, rows, 0, cfg)
    for _ in range(4):
        perm = numeric_split_scores(ds, rng.permutation(rows), 0, cfg)
        assert np.array_equal(perm.scores, base.scores)
        assert np.array_equal(perm.thresholds, base.thresholds)


def test_duplicate_rows_act_as_weights():
    X = np.array([[1.0], [2.0], [3.0]])
    y = np.array([0.0, 1.0, 7.0])
    ds = from_arrays(X, y)
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0]))
    doubled = numeric_split_scores(ds, [0, 0, 1, 1, 2, 2], 0, cfg)
    # explicit replication of the same rows scores identically
    X2 = np.repeat(X, 2, axis=0)
    ds2 = from_arrays(X2, np.repeat(y, 2))
    cfg2 = SplitConfig(lam=1.0, lin=linear_feature_set(ds2, [0]))
    explicit = numeric_split_scores(ds2, np.arange(6), 0, cfg2)
    assert np.allclose(doubled.scores, explicit.scores, rtol=1e-12)
    assert np.array_equal(doubled.thresholds, explicit.thresholds)


def test_sweep_is_incremental_not_refit():
    OPS.reset()
    n = 200
    rng = np.random.default_rng(1)
    ds = from_arrays(rng.standard_normal((n, 1)), rng.standard_normal(n))
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0]))
    numeric_split_scores(ds, np.arange(n), 0, cfg)
    # all values distinct: n-1 boundaries, each side touched once per row
    assert OPS.add == n - 2
    assert OPS.remove == n - 2
    assert OPS.phi == 2 * (n - 1)
    OPS.reset()


def test_best_candidate_attains_profile_minimum():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(10, 60))
        ds = from_arrays(rng.standard_normal((n, 2)), rng.standard_normal(n))
        cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0, 1]))
        profile = numeric_split_scores(ds, np.arange(n), 0, cfg)
        cand = best_split_numeric(ds, np.arange(n), 0, cfg)
        assert cand.score <= profile.scores.min() + TIE_REL_EPS * profile.sum_y_sq


def test_constant_response_tie_takes_smallest_threshold():
    X = np.arange(1.0, 9.0)[:, None]
    ds = from_arrays(X, np.full(8, 3.0))
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0]))
    cand = best_split_numeric(ds, np.arange(8), 0, cfg)
    assert cand.threshold == 1.5


def test_improves_needs_margin():
    assert improves(1.0, 1.0 + 1e-6, scale=1.0)
    assert not improves(1.0, 1.0, scale=1.0)
    assert not improves(1.0 - 1e-12, 1.0, scale=100.0)


# ---------------------------------------------------------------------------
# categorical


def cat_dataset():
    rng = np.random.default_rng(31)
    n = 40
    x = rng.standard_normal(n)
    codes = np.tile([0, 1, 2, 3], 10).astype(np.int64)
    y = 1.5 * x + np.where(codes == 2, 8.0, 0.0) + 0.1 * rng.standard_normal(n)
    ds = Dataset([Column("x", "numeric", x),
                  Column("g", CATEGORICAL, codes, ("a", "b", "c", "d"))], y)
    cfg = SplitConfig(lam=0.1, lin=linear_feature_set(ds, [0]))
    return ds, cfg


def test_categorical_picks_shifted_level():
    ds, cfg = cat_dataset()
    cand = best_split_categorical(ds, np.arange(ds.n), 1, cfg)
    assert cand.level == 2
    assert cand.kind == CATEGORICAL
    assert (cand.left_count, cand.right_count) == (10, 30)


def test_categorical_profile_lists_each_level_once():
    ds, cfg = cat_dataset()
    profile = categorical_split_scores(ds, np.arange(ds.n), 1, cfg)
    assert np.array_equal(profile.levels, [0, 1, 2, 3])
    assert np.array_equal(profile.left_counts, [10, 10, 10, 10])


def test_categorical_min_child_size_drops_small_levels():
    codes = np.array([0, 0, 0, 0, 0, 1, 2, 2], dtype=np.int64)
    x = np.arange(8.0)
    ds = Dataset([Column("x", "numeric", x),
                  Column("g", CATEGORICAL, codes, ("a", "b", "c"))],
                 np.arange(8.0))
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0]),
                      min_child_size=2)
    profile = categorical_split_scores(ds, np.arange(8), 1, cfg)
    assert np.array_equal(profile.levels, [0, 2])   # singleton level 1 dropped


def test_categorical_single_level_is_unsplittable():
    codes = np.zeros(6, dtype=np.int64)
    ds = Dataset([Column("x", "numeric", np.arange(6.0)),
                  Column("g", CATEGORICAL, codes, ("a",))], np.arange(6.0))
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0]))
    assert best_split_categorical(ds, np.arange(6), 1, cfg) is None


# ---------------------------------------------------------------------------
# per-node selection


def test_best_split_node_scans_both_kinds():
    ds, cfg = cat_dataset()
    cand = best_split_node(ds, np.arange(ds.n), [0, 1], cfg)
    # the level-c shift dominates the smooth trend in x
    assert cand.kind == CATEGORICAL
    assert cand.level == 2


def test_best_split_node_tie_takes_smallest_feature():
    x = np.arange(1.0, 11.0)
    X = np.column_stack([x, x])   # identical columns: scores tie exactly
    ds = from_arrays(X, np.full(10, 2.0))
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0, 1]))
    cand = best_split_node(ds, np.arange(10), [0, 1], cfg)
    assert cand.feature == 0
    assert cand.threshold == 1.5


def test_best_split_node_requires_features():
    ds, cfg = cat_dataset()
    with pytest.raises(ConfigError):
        best_split_node(ds, np.arange(ds.n), [], cfg)


def test_best_split_node_none_when_nothing_valid():
    ds = from_arrays(np.ones((6, 1)), np.arange(6.0))
    cfg = SplitConfig(lam=1.0, lin=linear_feature_set(ds, [0]))
    assert best_split_node(ds, np.arange(6), [0], cfg) is None


def test_rel_close_helper():
    assert rel_close(100.0, 100.0 + 1e-7, 1e-8)
    assert not rel_close(100.0, 100.1, 1e-8)
