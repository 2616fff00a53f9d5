"""Synthetic benchmark surfaces: linear, random step, and the mixed gate.

The step surface follows the scheme of drawing uniform level values for a
few anchor rows and growing a constant-leaf tree to purity over them with
random split features and random thresholds; its prediction function is
the piecewise-constant surface. All generators are pure functions of
their seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, from_arrays
from .errors import ConfigError

N_FEATURES = 10
# 1-based feature formula: -0.47*X2 - 0.98*X3 - 0.87*X4 + 0.63*X8 - 0.64*X10
LINEAR_COEF = {1: -0.47, 2: -0.98, 3: -0.87, 7: 0.63, 9: -0.64}
LINEAR_NOISE_SD = 2.0
STEP_NOISE_SD = 1.0
MIXED_GATE = 0.5
_TEST_STREAM = 7919


def linear_surface(X: np.ndarray) -> np.ndarray:
    y = np.zeros(X.shape[0])
    for col, coef in LINEAR_COEF.items():
        y += coef * X[:, col]
    return y


class StepSurface:
    """Piecewise-constant purity tree over anchor rows."""

    def __init__(self):
        self.feature: list[int] = []       # -1 marks a leaf
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _append(self, feature, threshold, value) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.feature) - 1

    @property
    def leaf_values(self) -> np.ndarray:
        return np.array([v for f, v in zip(self.feature, self.value) if f < 0])

    def predict_one(self, x: np.ndarray) -> float:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] < self.threshold[i] else self.right[i]
        return self.value[i]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(X[i]) for i in range(X.shape[0])])


def _grow_step_surface(rng: np.random.Generator, AX: np.ndarray,
                       u: np.ndarray) -> StepSurface:
    surf = StepSurface()
    stack: list[tuple[np.ndarray, int, str]] = [(np.arange(len(u)), -1, "")]
    while stack:
        idx, parent, side = stack.pop()
        if idx.size == 1:
            me = surf._append(-1, 0.0, float(u[idx[0]]))
        else:
            while True:
                f = int(rng.integers(0, AX.shape[1]))
                vals = AX[idx, f]
                lo, hi = float(vals.min()), float(vals.max())
                if lo == hi:
                    continue
                thr = float(rng.uniform(lo, hi))
                lmask = vals < thr
                if lmask.any() and not lmask.all():
                    break
            me = surf._append(f, thr, 0.0)
            stack.append((idx[~lmask], me, "right"))
            stack.append((idx[lmask], me, "left"))
        if parent >= 0:
            if side == "left":
                surf.left[parent] = me
            else:
                surf.right[parent] = me
    return surf


@dataclass
class SynthSpec:
    kind: str                      # linear | step | mixed
    n: int
    seed: int
    num_levels: int | None = None

    def validate(self):
        if self.kind not in ("linear", "step", "mixed"):
            raise ConfigError(f"unknown synthetic kind '{self.kind}'")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.kind != "linear":
            if self.num_levels is None or self.num_levels < 1:
                raise ConfigError("step/mixed surfaces need num_levels >= 1")
            if self.num_levels > self.n:
                raise ConfigError("num_levels cannot exceed n")


def gen_linear(n: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, N_FEATURES))
    y = linear_surface(X) + rng.normal(0.0, LINEAR_NOISE_SD, n)
    return from_arrays(X, y)


def _step_parts(rng: np.random.Generator, n: int, num_levels: int):
    # draw order: X, level values, anchor rows, purity tree
    X = rng.standard_normal((n, N_FEATURES))
    u = rng.uniform(-10.0, 10.0, num_levels)
    anchors = rng.choice(n, size=num_levels, replace=False)
    surf = _grow_step_surface(rng, X[anchors], u)
    return X, surf


def gen_step(n: int, num_levels: int, seed: int) -> tuple[Dataset, StepSurface]:
    SynthSpec("step", n, seed, num_levels).validate()
    rng = np.random.default_rng(seed)
    X, surf = _step_parts(rng, n, num_levels)
    y = surf.predict(X) + rng.normal(0.0, STEP_NOISE_SD, n)
    return from_arrays(X, y), surf


def mixed_surface(X: np.ndarray, surf: StepSurface) -> np.ndarray:
    return np.where(X[:, 0] < MIXED_GATE, linear_surface(X), surf.predict(X))


def gen_mixed(n: int, num_levels: int, seed: int) -> tuple[Dataset, StepSurface]:
    SynthSpec("mixed", n, seed, num_levels).validate()
    rng = np.random.default_rng(seed)
    X, surf = _step_parts(rng, n, num_levels)
    y = mixed_surface(X, surf) + rng.normal(0.0, STEP_NOISE_SD, n)
    return from_arrays(X, y), surf


def gen_dataset(spec: SynthSpec) -> Dataset:
    spec.validate()
    if spec.kind == "linear":
        return gen_linear(spec.n, spec.seed)
    if spec.kind == "step":
        return gen_step(spec.n, spec.num_levels, spec.seed)[0]
    return gen_mixed(spec.n, spec.num_levels, spec.seed)[0]


def gen_train_test(spec: SynthSpec, n_test: int) -> tuple[Dataset, Dataset]:
    """Train set per spec plus a test set from the same surface.

    The test stream is seeded by (seed, fixed tag) so the pair is
    deterministic; step/mixed test responses reuse the training surface.
    """
    spec.validate()
    if n_test < 1:
        raise ConfigError("n_test must be >= 1")
    surf = None
    if spec.kind == "linear":
        train = gen_linear(spec.n, spec.seed)
    elif spec.kind == "step":
        train, surf = gen_step(spec.n, spec.num_levels, spec.seed)
    else:
        train, surf = gen_mixed(spec.n, spec.num_levels, spec.seed)
    rng = np.random.default_rng([spec.seed, _TEST_STREAM])
    X = rng.standard_normal((n_test, N_FEATURES))
    if spec.kind == "linear":
        y = linear_surface(X) + rng.normal(0.0, LINEAR_NOISE_SD, n_test)
    elif spec.kind == "step":
        y = surf.predict(X) + rng.normal(0.0, STEP_NOISE_SD, n_test)
    else:
        y = mixed_surface(X, surf) + rng.normal(0.0, STEP_NOISE_SD, n_test)
    return train, from_arrays(X, y)
