"""Running ridge components for one side of a candidate split.

For a node side H with augmented rows z_i = [x_i; 1] and responses y_i:

    G = sum z_i z_i^T          (unregularized Gram)
    A = G + lambda * J         (J = diag(1,...,1,0): intercept unpenalized)
    S = sum y_i z_i
    phi = S^T A^-1 G A^-1 S - 2 S^T A^-1 S

so RSS(H) = phi + sum y_i^2, and the ridge solution is coef = A^-1 S.
A^-1 is maintained under single-observation add/remove by rank-one
updates; a near-zero update denominator (or the periodic refresh) falls
back to direct inversion of (G + lambda*J).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError

SM_DENOM_EPS = 1e-12
DEFAULT_RECOMPUTE_EVERY = 4096


class OpCounter:
    """Test instrumentation: counts component operations during a sweep."""

    __slots__ = ("add", "remove", "phi")

    def __init__(self):
        self.reset()

    def reset(self):
        self.add = 0
        self.remove = 0
        self.phi = 0


OPS = OpCounter()


@dataclass
class LeafModel:
    beta: np.ndarray
    intercept: float
    lam: float


def predict_leaf(m: LeafModel, x_lin: np.ndarray) -> float:
    return float(x_lin @ m.beta + m.intercept)


@njit(cache=True)
def _rank_one_update(a_inv, s, g, z, y, sign, lam):
    """Apply one add (sign=+1) or remove (sign=-1); returns True on fallback.

    a_inv -= sign * (a_inv z)(a_inv z)^T / (1 + sign * z^T a_inv z); with
    |denominator| < SM_DENOM_EPS, a_inv is rebuilt from (g + lam*J) instead.
    """
    p = z.shape[0]
    for i in range(p):
        s[i] += sign * y * z[i]
        zi = sign * z[i]
        for j in range(p):
            g[i, j] += zi * z[j]
    q = np.empty(p)
    for i in range(p):
        acc = 0.0
        for j in range(p):
            acc += a_inv[i, j] * z[j]
        q[i] = acc
    zq = 0.0
    for i in range(p):
        zq += z[i] * q[i]
    denom = 1.0 + sign * zq
    if abs(denom) < SM_DENOM_EPS:
        m = g.copy()
        for i in range(p - 1):
            m[i, i] += lam
        inv = np.linalg.inv(m)
        for i in range(p):
            for j in range(p):
                a_inv[i, j] = 0.5 * (inv[i, j] + inv[j, i])
        return True
    c = sign / denom
    for i in range(p):
        cqi = c * q[i]
        for j in range(p):
            a_inv[i, j] -= cqi * q[j]
    return False


@njit(cache=True)
def _phi_value(a_inv, s, g):
    p = s.shape[0]
    v = np.empty(p)
    for i in range(p):
        acc = 0.0
        for j in range(p):
            acc += a_inv[i, j] * s[j]
        v[i] = acc
    quad = 0.0
    lin = 0.0
    for i in range(p):
        gv = 0.0
        for j in range(p):
            gv += g[i, j] * v[j]
        quad += v[i] * gv
        lin += s[i] * v[i]
    return quad - 2.0 * lin


def _direct_inverse(g: np.ndarray, lam: float) -> np.ndarray:
    a = g.copy()
    a[np.diag_indices(a.shape[0] - 1)] += lam
    inv = np.linalg.inv(a)
    return 0.5 * (inv + inv.T)


class RidgeComponents:
    """Value type owned by a single sweep; copy() before sharing."""

    __slots__ = ("a_inv", "s", "g", "count", "lam", "sum_y_sq",
                 "recompute_every", "fallback_count", "_updates")

    def __init__(self, a_inv, s, g, count, lam, sum_y_sq,
                 recompute_every=DEFAULT_RECOMPUTE_EVERY):
        self.a_inv = a_inv
        self.s = s
        self.g = g
        self.count = count
        self.lam = lam
        self.sum_y_sq = sum_y_sq
        self.recompute_every = recompute_every
        self.fallback_count = 0
        self._updates = 0

    def copy(self) -> "RidgeComponents":
        c = RidgeComponents(self.a_inv.copy(), self.s.copy(), self.g.copy(),
                            self.count, self.lam, self.sum_y_sq,
                            self.recompute_every)
        return c

    def _after_update(self, fell_back: bool):
        if fell_back:
            self.fallback_count += 1
            self._updates = 0
            return
        self._updates += 1
        if self._updates >= self.recompute_every:
            # Periodic refresh caps floating-point drift on long sweeps.
            self.a_inv = _direct_inverse(self.g, self.lam)
            self._updates = 0

    def add(self, z: np.ndarray, y: float):
        OPS.add += 1
        fell_back = _rank_one_update(self.a_inv, self.s, self.g, z, y, 1.0,
                                     self.lam)
        self.count += 1
        self.sum_y_sq += y * y
        self._after_update(fell_back)
        return self

    def remove(self, z: np.ndarray, y: float):
        if self.count < 2:
            raise ConfigError("remove would empty the component set")
        OPS.remove += 1
        fell_back = _rank_one_update(self.a_inv, self.s, self.g, z, y, -1.0,
                                     self.lam)
        self.count -= 1
        self.sum_y_sq -= y * y
        self._after_update(fell_back)
        return self

    def phi(self) -> float:
        OPS.phi += 1
        return _phi_value(self.a_inv, self.s, self.g)

    def rss(self) -> float:
        return self.phi() + self.sum_y_sq

    def solve(self) -> LeafModel:
        coef = self.a_inv @ self.s
        return LeafModel(beta=coef[:-1].copy(), intercept=float(coef[-1]),
                         lam=self.lam)


def components_from_rows(Z: np.ndarray, y: np.ndarray, lam: float,
                         recompute_every=DEFAULT_RECOMPUTE_EVERY) -> RidgeComponents:
    """Build components for augmented rows Z (m x (d_lin+1)) by direct inversion."""
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 1:
        raise ConfigError("components_from_rows needs at least one row")
    if lam <= 0:
        raise ConfigError("ridge penalty must be > 0")
    g = Z.T @ Z
    g = 0.5 * (g + g.T)
    s = Z.T @ y
    return RidgeComponents(_direct_inverse(g, lam), s, g, Z.shape[0], lam,
                           float(y @ y), recompute_every)


def rss_pair(left: RidgeComponents, right: RidgeComponents) -> float:
    """phi(left) + phi(right): the split score (RSS up to the constant sum y^2)."""
    return left.phi() + right.phi()
