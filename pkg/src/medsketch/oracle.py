"""Exact error distributions of CountSketch estimators under fully random hashing.

Every assignment of buckets ``h: keys -> [s]`` and signs ``g: keys -> {-1,+1}``
on the keys involved is enumerated with weight ``s**-d * 2**-d``.  Fully
random hashing satisfies every k-wise independence assumption, and it is
the only model small enough to enumerate.  Rows of a sketch use
independent hash functions, so the median over ``2t - 1`` rows is the
median of i.i.d. copies of the single-row error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .median import DiscreteDist
from .sketch import SparseVector

ErrorDist = DiscreteDist

DEFAULT_MAX_CONFIGS = 10**7


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class EnumLimits:
    max_configs: int = DEFAULT_MAX_CONFIGS

    def __post_init__(self):
        if self.max_configs < 1:
            raise ValueError("max_configs must be positive")

    def check(self, n: int, what: str) -> None:
        if n > self.max_configs:
            raise EnumerationTooLarge(f"{what}: {n} configurations exceed the cap of {self.max_configs}")


def _all_buckets(s: int, d: int) -> np.ndarray:
    """Every map from ``d`` keys to ``[s]``, one per row: shape ``(s**d, d)``."""
    if d == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.indices((s,) * d).reshape(d, -1).T


def _all_signs(d: int) -> np.ndarray:
    """Every map from ``d`` keys to {-1, +1}: shape ``(2**d, d)``."""
    return 1.0 - 2.0 * _all_buckets(2, d)


def _config_count(s: int, d: int) -> int:
    return s**d * 2**d


def single_row_point_error_dist(
    v: SparseVector, j: int, s: int, limits: EnumLimits = EnumLimits()
) -> ErrorDist:
    """Distribution of ``g(j) * A[h(j)] - v_j`` for one fully random row."""
    keys = sorted(set(v.entries) | {int(j)})
    d = len(keys)
    limits.check(_config_count(s, d), "single-row point error")
    vals = np.array([v[k] for k in keys])
    jpos = keys.index(int(j))
    H = _all_buckets(s, d)
    G = _all_signs(d)
    same = (H == H[:, [jpos]]).astype(np.float64)  # (s**d, d)
    # estimate = g(j) * sum_i [h(i) = h(j)] g(i) v_i
    weighted = G * G[:, [jpos]] * vals  # (2**d, d)
    err = same @ weighted.T - vals[jpos]
    return ErrorDist(err.ravel(), np.full(err.size, 1.0 / err.size))


def single_row_inner_error_dist(
    v: SparseVector, w: SparseVector, s: int, limits: EnumLimits = EnumLimits()
) -> ErrorDist:
    """Distribution of ``<A^v_1, A^w_1> - <v, w>`` with shared fully random hashes."""
    keys = sorted(set(v.entries) | set(w.entries))
    d = len(keys)
    truth = v.dot(w)
    if d == 0:
        return ErrorDist.point_mass(0.0)
    limits.check(_config_count(s, d), "single-row inner-product error")
    vv = np.array([v[k] for k in keys])
    ww = np.array([w[k] for k in keys])
    H = _all_buckets(s, d)
    G = _all_signs(d)
    collide = (H[:, :, None] == H[:, None, :]).astype(np.float64)  # (s**d, d, d)
    # sum over buckets of A^v_b A^w_b = sum_{i,k} [h(i)=h(k)] g(i) v_i g(k) w_k
    est = np.einsum("hik,gi,gk->hg", collide, G * vv, G * ww, optimize=True)
    err = est - truth
    return ErrorDist(err.ravel(), np.full(err.size, 1.0 / err.size))


def median_of_iid_distribution(
    dist: DiscreteDist, t: int, method: str = "cdf", limits: EnumLimits = EnumLimits()
) -> DiscreteDist:
    """Exact distribution of the median of ``2t - 1`` i.i.d. draws from ``dist``.

    ``method="enumerate"`` sums product weights over every tuple of atoms;
    ``method="cdf"`` uses ``P[Y <= y] = sum_{i>=t} C(n,i) F(y)^i (1-F(y))^(n-i)``.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    n = 2 * t - 1
    if t == 1:
        return dist
    m = len(dist)
    if method == "enumerate":
        limits.check(m**n, "median tuple enumeration")
        idx = np.indices((m,) * n).reshape(n, -1)  # atoms are sorted, so ranks order values
        weight = np.prod(dist.probs[idx], axis=0)
        med = np.sort(idx, axis=0)[t - 1]
        probs = np.bincount(med, weights=weight, minlength=m)
    elif method == "cdf":
        F = dist.cdf()
        G = np.zeros_like(F)
        for i in range(t, n + 1):
            G += math.comb(n, i) * F**i * (1.0 - F) ** (n - i)
        G[-1] = 1.0
        probs = np.diff(np.concatenate(([0.0], G)))
        probs = np.clip(probs, 0.0, None)
        probs[-1] += 1.0 - probs.sum()
    else:
        raise ValueError(f"unknown method {method!r}")
    return DiscreteDist(dist.values, probs)


def median_point_error_dist(
    v: SparseVector, j: int, s: int, t: int, limits: EnumLimits = EnumLimits()
) -> ErrorDist:
    return median_of_iid_distribution(single_row_point_error_dist(v, j, s, limits), t, limits=limits)


def median_inner_error_dist(
    v: SparseVector, w: SparseVector, s: int, t: int, limits: EnumLimits = EnumLimits()
) -> ErrorDist:
    return median_of_iid_distribution(single_row_inner_error_dist(v, w, s, limits), t, limits=limits)


def moment_of(dist: DiscreteDist, order: int, absolute: bool = True) -> float:
    """``sum p * |x|**order`` (signed power when ``absolute`` is false)."""
    return dist.moment(order, center=0.0, absolute=absolute)


def enumerated_configs(keys_count: int, s: int) -> int:
    return _config_count(s, keys_count)


def iter_configs(s: int, d: int):
    """Yield every ``(buckets, signs)`` assignment for ``d`` keys (slow reference)."""
    for hb in itertools.product(range(s), repeat=d):
        for gb in itertools.product((1, -1), repeat=d):
            yield hb, gb
