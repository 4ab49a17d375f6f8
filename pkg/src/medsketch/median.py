"""Medians of odd-sized samples, finite distributions and empirical moments."""

from __future__ import annotations

from math import comb
from typing import Iterator, Sequence

import numpy as np

MERGE_TOL = 1e-12


def median_odd(values: Sequence[float]) -> float:
    """Middle order statistic of an odd-length sample.

    Sorting ascending, the element at zero-based position ``t - 1`` of a
    sample of size ``2t - 1``.  Never interpolates, so the result is always
    one of the inputs.
    """
    arr = np.asarray(values, dtype=np.float64).ravel()
    n = arr.size
    if n == 0 or n % 2 == 0:
        raise ValueError(f"median_odd needs an odd, non-empty sample (got {n} values)")
    return float(np.partition(arr, n // 2)[n // 2])


def median_along(arr: np.ndarray, axis: int = -1) -> np.ndarray:
    """Vectorized ``median_odd`` along one axis (axis length must be odd)."""
    arr = np.asarray(arr, dtype=np.float64)
    n = arr.shape[axis]
    if n % 2 == 0:
        raise ValueError(f"median axis has even length {n}")
    if n == 1:
        return np.take(arr, 0, axis=axis)
    return np.take(np.partition(arr, n // 2, axis=axis), n // 2, axis=axis)


def empirical_moment(samples, center: float, order: int, absolute: bool = True) -> float:
    """``mean(|x - center|**order)``, or the signed power when ``absolute`` is false."""
    if order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empirical_moment of an empty sample")
    dev = x - center
    if absolute:
        dev = np.abs(dev)
    return float(np.mean(dev**order))


class DiscreteDist:
    """A probability distribution on finitely many real atoms.

    Atoms are stored sorted.  Values closer than ``MERGE_TOL`` are merged and
    zero-probability atoms dropped, so two routes to the same distribution
    end up with the same support despite floating-point noise.
    """

    __slots__ = ("values", "probs")

    def __init__(self, values, probs, *, tol: float = MERGE_TOL):
        values = np.asarray(values, dtype=np.float64).ravel()
        probs = np.asarray(probs, dtype=np.float64).ravel()
        if values.shape != probs.shape or values.size == 0:
            raise ValueError("values and probs must be non-empty and of equal length")
        if not np.all(np.isfinite(values)):
            raise ValueError("distribution values must be finite")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        total = float(np.sum(probs))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        order = np.argsort(values, kind="stable")
        values, probs = values[order], probs[order]
        # start a new atom wherever the gap to the previous value exceeds tol
        starts = np.concatenate(([True], np.diff(values) > tol))
        group = np.cumsum(starts) - 1
        merged_p = np.bincount(group, weights=probs)
        merged_v = values[starts]
        keep = merged_p > 0
        self.values = merged_v[keep]
        self.probs = merged_p[keep]

    @classmethod
    def from_pairs(cls, pairs) -> "DiscreteDist":
        pairs = list(pairs)
        return cls([v for v, _ in pairs], [p for _, p in pairs])

    @classmethod
    def point_mass(cls, value: float) -> "DiscreteDist":
        return cls([value], [1.0])

    @property
    def support(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self.support)

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"DiscreteDist({self.support!r})"

    def prob(self, value: float, tol: float = MERGE_TOL) -> float:
        hit = np.abs(self.values - value) <= tol
        return float(self.probs[hit].sum())

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def moment(self, order: int, center: float = 0.0, absolute: bool = True) -> float:
        dev = self.values - center
        if absolute:
            dev = np.abs(dev)
        return float(np.dot(dev**order, self.probs))

    def central_abs_moment(self, order: int) -> float:
        """``E|X - E[X]|**order``."""
        return self.moment(order, center=self.mean())

    def variance(self) -> float:
        return self.moment(2, center=self.mean())

    def cdf(self) -> np.ndarray:
        """``P[X <= values[k]]`` for each atom, with the last entry exactly 1."""
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return np.minimum(c, 1.0)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.choice(self.values, size=size, p=self.probs / self.probs.sum())

    def allclose(self, other: "DiscreteDist", atol: float = 1e-10) -> bool:
        return (
            self.values.shape == other.values.shape
            and np.allclose(self.values, other.values, rtol=0, atol=MERGE_TOL * 10)
            and np.allclose(self.probs, other.probs, rtol=0, atol=atol)
        )


def tightness_dist(k: int) -> DiscreteDist:
    """``k`` with probability ``1/k``, otherwise 0 (mean exactly 1)."""
    if k < 2:
        raise ValueError(f"tightness_dist needs k >= 2, got {k}")
    return DiscreteDist([float(k), 0.0], [1.0 / k, 1.0 - 1.0 / k])


def sample_median_of_iid(dist: DiscreteDist, t: int, rng: np.random.Generator) -> float:
    """Median of ``2t - 1`` independent draws from ``dist``."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return median_odd(dist.sample(rng, 2 * t - 1))


def sample_medians(dist: DiscreteDist, t: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent realizations of ``sample_median_of_iid``."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    return median_along(dist.sample(rng, (n, 2 * t - 1)), axis=1)


def median_moment_bound(dist: DiscreteDist, t: int, q: int) -> float:
    """``C(2t-1, t) * (E|X - E[X]|**q)**t``, the bound on ``E|Y - E[X]|**(tq)``."""
    return comb(2 * t - 1, t) * dist.central_abs_moment(q) ** t


def random_discrete_dist(rng: np.random.Generator, max_support: int = 6) -> DiscreteDist:
    """Random distribution for property tests.

    Support size uniform in ``[2, max_support]``, values uniform in
    ``[-10, 10]``, probabilities a normalized vector of uniform(0, 1] draws.
    """
    n = int(rng.integers(2, max_support + 1))
    values = rng.uniform(-10.0, 10.0, size=n)
    weights = 1.0 - rng.random(n)
    return DiscreteDist(values, weights / weights.sum())
