"""Batched Monte-Carlo simulation of independent CountSketches.

Trial ``i`` of a run seeded with ``seed`` uses the sketch whose master seed
is output ``i`` of the SplitMix64 stream of ``seed`` (see ``trial_seeds``),
so any single trial can be rebuilt as an ordinary ``CountSketch``.  Trials
are simulated in fixed-size chunks: per chunk the row hashes of every trial
are evaluated at once on the support keys and the queried keys.

A simulation with ``max(t)`` rows serves every smaller ``t`` too: the first
``2t - 1`` rows of a master seed are exactly the rows of the ``t``-sketch
with that seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .hashing import RowHashes, SignFamily, _check_fourwise_keys, log2_exact, splitmix64_stream
from .median import median_along
from .sketch import SparseVector

QUERY_SALT = 0x5DEECE66D2B7E151
CHUNK_BUDGET = 1 << 20

MULTIPLY_SHIFT = "multiply-shift"
FULLY_RANDOM = "random"

NUMBA = "numba"
NUMPY = "numpy"
KERNEL_OUTPUT_BUDGET = 1 << 22


def trial_seeds(seed: int, start: int, count: int) -> np.ndarray:
    """Master seeds of trials ``start .. start+count-1``."""
    return splitmix64_stream(np.uint64(seed), count, start=start).reshape(count)


@dataclass(frozen=True)
class QueryPlan:
    """Keys each trial queries: fixed keys, or ``per_trial`` uniform draws from ``candidates``."""

    candidates: np.ndarray | None = None
    per_trial: int = 1
    fixed: np.ndarray | None = None

    @classmethod
    def fixed_keys(cls, keys) -> "QueryPlan":
        return cls(fixed=np.atleast_1d(np.asarray(keys, dtype=np.uint64)))

    @classmethod
    def sample_from(cls, candidates, per_trial: int) -> "QueryPlan":
        cand = np.unique(np.asarray(candidates, dtype=np.uint64))
        if cand.size == 0:
            raise ValueError("no candidate indices to query")
        if per_trial < 1:
            raise ValueError("need at least one query per trial")
        return cls(candidates=cand, per_trial=per_trial)

    @property
    def count(self) -> int:
        return self.fixed.size if self.fixed is not None else self.per_trial

    def keys_for(self, seeds: np.ndarray) -> np.ndarray:
        """Query keys shaped ``(1, 1, Q)`` or ``(N, 1, Q)``."""
        if self.fixed is not None:
            return self.fixed.reshape(1, 1, -1)
        draws = splitmix64_stream(seeds ^ np.uint64(QUERY_SALT), self.per_trial)
        idx = draws % np.uint64(self.candidates.size)
        return self.candidates[idx.astype(np.intp)][:, None, :]

    def universe(self) -> np.ndarray:
        return self.fixed if self.fixed is not None else self.candidates


class RandomRowMaps:
    """Fully random bucket and sign maps on a finite key universe.

    Buckets are the top bits of one uniform 64-bit word per (trial, row,
    key), so the same draw serves every power-of-two column count, as the
    multiply-shift family does.
    """

    def __init__(self, universe: np.ndarray, n: int, rows: int, rng: np.random.Generator):
        self.universe = np.unique(np.asarray(universe, dtype=np.uint64))
        u = self.universe.size
        self.words = rng.integers(0, 1 << 64, size=(n, rows, u), dtype=np.uint64, endpoint=False)
        self.signs = 1.0 - 2.0 * rng.integers(0, 2, size=(n, rows, u)).astype(np.float64)
        self.shape = (n, rows)

    def _gather(self, table: np.ndarray, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.uint64)
        pos = np.searchsorted(self.universe, keys)
        if np.any(pos >= self.universe.size) or np.any(self.universe[np.minimum(pos, self.universe.size - 1)] != keys):
            raise KeyError("key outside the simulated universe")
        shape = np.broadcast_shapes(pos.shape, self.shape + (1,))
        return np.take_along_axis(table, np.broadcast_to(pos, shape), axis=-1)

    def bucket(self, keys, out_bits: int) -> np.ndarray:
        return self._gather(self.words, keys) >> np.uint64(64 - out_bits)

    def sign(self, keys) -> np.ndarray:
        return self._gather(self.signs, keys)


def _lookup_columns(hashes, out_bits: int, supp_keys, gv, query_keys) -> np.ndarray:
    """``A_r[h_r(q)]`` for each trial, row and query: shape ``(N, R, Q)``.

    ``gv`` holds the signed support values ``g_r(i) * v_i`` as ``(N, R, K)``.
    """
    hb_s = hashes.bucket(supp_keys, out_bits)
    hb_q = hashes.bucket(query_keys, out_bits)
    n, rows, k = gv.shape
    hb_q = np.broadcast_to(hb_q, (n, rows, hb_q.shape[-1]))
    q = hb_q.shape[-1]
    if k == 0:
        return np.zeros((n, rows, q))
    s = 1 << out_bits
    if _uses_direct(k, q, s):
        eq = hb_q[..., :, None] == hb_s[..., None, :]
        return np.einsum("nrqk,nrk->nrq", eq, gv)
    base = (np.arange(n * rows, dtype=np.uint64) << np.uint64(out_bits)).reshape(n, rows, 1)
    table = np.bincount((base + hb_s).ravel().astype(np.intp), weights=gv.ravel(), minlength=n * rows * s)
    table = table.reshape(n, rows, s)
    return np.take_along_axis(table, hb_q.astype(np.intp), axis=-1)


def _uses_direct(k: int, q: int, s: int) -> bool:
    # pairwise bucket comparison beats building the table for small supports
    return k * q <= 2 * (k + q + s)


def _chunk_trials(rows: int, k: int, q: int, s_grid: Sequence[int]) -> int:
    cost = max(k * q if _uses_direct(k, q, s) else s for s in s_grid)
    return max(1, CHUNK_BUDGET // (rows * (k + q + cost)))


@dataclass
class SimulationSetup:
    t_values: Sequence[int]
    s_grid: Sequence[int]
    trials: int
    seed: int
    family: SignFamily = SignFamily.PAIRWISE
    model: str = MULTIPLY_SHIFT
    chunk: int | None = None
    backend: str = NUMBA
    _log2: list[int] = field(init=False)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.t_values or min(self.t_values) < 1:
            raise ValueError("t values must be positive")
        if not self.s_grid:
            raise ValueError("empty s grid")
        self._log2 = [log2_exact(s) for s in self.s_grid]
        if self.model not in (MULTIPLY_SHIFT, FULLY_RANDOM):
            raise ValueError(f"unknown hash model {self.model!r}")
        self.family = SignFamily(self.family)
        if self.backend not in (NUMBA, NUMPY):
            raise ValueError(f"unknown backend {self.backend!r}")

    @property
    def uses_kernels(self) -> bool:
        """Fused kernels cover multiply-shift hashing only."""
        return self.backend == NUMBA and self.model == MULTIPLY_SHIFT

    @property
    def rows(self) -> int:
        return 2 * max(self.t_values) - 1

    def chunks(self, k: int, q: int) -> Iterator[tuple[int, int]]:
        if self.chunk:
            step = self.chunk
        elif self.uses_kernels:
            step = max(1, KERNEL_OUTPUT_BUDGET // (len(self.s_grid) * self.rows * max(q, 1)))
        else:
            step = _chunk_trials(self.rows, k, q, self.s_grid)
        for start in range(0, self.trials, step):
            yield start, min(step, self.trials - start)

    def hashes(self, seeds: np.ndarray, start: int, universe: np.ndarray):
        if self.model == MULTIPLY_SHIFT:
            return RowHashes(seeds, self.rows, self.family)
        rng = np.random.default_rng([self.seed & 0xFFFFFFFF, self.seed >> 32, start])
        return RandomRowMaps(universe, seeds.size, self.rows, rng)


def _truth(v: SparseVector, keys: np.ndarray) -> np.ndarray:
    sk, sv = v.keys, v.values
    if sk.size == 0:
        return np.zeros(keys.shape)
    pos = np.minimum(np.searchsorted(sk, keys), sk.size - 1)
    return np.where(sk[pos] == keys, sv[pos], 0.0)


def point_error_batches(
    v: SparseVector, queries: QueryPlan, setup: SimulationSetup
) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield ``(t, s, errors)`` per chunk; ``errors`` has shape ``(trials_in_chunk, Q)``."""
    if setup.uses_kernels:
        yield from _point_batches_kernel(v, queries, setup)
        return
    supp = v.keys.reshape(1, 1, -1)
    vals = v.values
    universe = np.union1d(v.keys, queries.universe())
    for start, n in setup.chunks(vals.size, queries.count):
        seeds = trial_seeds(setup.seed, start, n)
        hashes = setup.hashes(seeds, start, universe)
        qkeys = queries.keys_for(seeds)
        gv = hashes.sign(supp) * vals
        sign_q = hashes.sign(qkeys)
        truth = _truth(v, qkeys[:, 0, :])
        for s, bits in zip(setup.s_grid, setup._log2):
            est = sign_q * _lookup_columns(hashes, bits, supp, gv, qkeys)
            for t in setup.t_values:
                yield t, s, median_along(est[:, : 2 * t - 1, :], axis=1) - truth


def inner_error_batches(
    v: SparseVector, w: SparseVector, setup: SimulationSetup
) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield ``(t, s, errors)`` per chunk; ``errors`` has shape ``(trials_in_chunk, 1)``."""
    if setup.uses_kernels:
        yield from _inner_batches_kernel(v, w, setup)
        return
    supp_v = v.keys.reshape(1, 1, -1)
    supp_w = w.keys.reshape(1, 1, -1)
    truth = v.dot(w)
    universe = np.union1d(v.keys, w.keys)
    for start, n in setup.chunks(len(v), len(w)):
        seeds = trial_seeds(setup.seed, start, n)
        hashes = setup.hashes(seeds, start, universe)
        gv = hashes.sign(supp_v) * v.values
        gw = hashes.sign(supp_w) * w.values
        for s, bits in zip(setup.s_grid, setup._log2):
            if len(w) == 0:
                rows_ip = np.zeros((n, setup.rows))
            else:
                rows_ip = np.einsum("nrk,nrk->nr", gw, _lookup_columns(hashes, bits, supp_v, gv, supp_w))
            for t in setup.t_values:
                yield t, s, (median_along(rows_ip[:, : 2 * t - 1], axis=1) - truth)[:, None]


def _kernel_args(setup: SimulationSetup, *key_sets: np.ndarray):
    fourwise = setup.family is SignFamily.FOURWISE
    if fourwise:
        for keys in key_sets:
            _check_fourwise_keys(keys)
    shifts = np.array([64 - b for b in setup._log2], dtype=np.uint64)
    return fourwise, shifts, max(setup.s_grid)


def _point_batches_kernel(v: SparseVector, queries: QueryPlan, setup: SimulationSetup):
    from . import _kernels

    keys, vals = v.keys, v.values
    fourwise, shifts, max_cols = _kernel_args(setup, keys, queries.universe())
    k, q = keys.size, queries.count
    direct = k * q <= 2 * k + q
    for start, n in setup.chunks(k, q):
        seeds = trial_seeds(setup.seed, start, n)
        qkeys = np.ascontiguousarray(queries.keys_for(seeds)[:, 0, :])
        out = np.empty((shifts.size, n, setup.rows, q))
        if direct:
            _kernels.point_rows(seeds, setup.rows, fourwise, keys, vals, qkeys, shifts, out)
        else:
            _kernels.point_rows_table(seeds, setup.rows, fourwise, keys, vals, qkeys, shifts, max_cols, out)
        truth = _truth(v, qkeys)
        for si, s in enumerate(setup.s_grid):
            for t in setup.t_values:
                yield t, s, median_along(out[si, :, : 2 * t - 1, :], axis=1) - truth


def _inner_batches_kernel(v: SparseVector, w: SparseVector, setup: SimulationSetup):
    from . import _kernels

    fourwise, shifts, max_cols = _kernel_args(setup, v.keys, w.keys)
    truth = v.dot(w)
    for start, n in setup.chunks(len(v), 1):
        seeds = trial_seeds(setup.seed, start, n)
        out = np.empty((shifts.size, n, setup.rows))
        _kernels.inner_rows(seeds, setup.rows, fourwise, v.keys, v.values, w.keys, w.values,
                            shifts, max_cols, out)
        for si, s in enumerate(setup.s_grid):
            for t in setup.t_values:
                yield t, s, (median_along(out[si, :, : 2 * t - 1], axis=1) - truth)[:, None]


@dataclass
class MomentEstimate:
    """Mean of per-trial statistics with its standard error over trials."""

    moment: float
    stderr: float
    trials: int
    samples: int


class MomentAccumulator:
    """Streaming mean/variance of per-trial mean ``|err|**order`` for several orders.

    Chunks are merged in arrival order with the pairwise mean/variance
    update, so a fixed chunking gives bit-identical results.
    """

    def __init__(self, orders: Sequence[int]):
        self.orders = tuple(orders)
        self._state: dict[tuple[int, int, int], list[float]] = {}
        self._samples: dict[tuple[int, int], int] = {}

    def add(self, t: int, s: int, errors: np.ndarray) -> None:
        a = np.abs(errors)
        self._samples[(t, s)] = self._samples.get((t, s), 0) + errors.size
        for order in self.orders:
            per_trial = np.mean(a**order, axis=1)
            n_b = per_trial.size
            mean_b = float(np.mean(per_trial))
            m2_b = float(np.sum((per_trial - mean_b) ** 2))
            st = self._state.setdefault((t, s, order), [0, 0.0, 0.0])
            n_a, mean_a, m2_a = st
            n = n_a + n_b
            delta = mean_b - mean_a
            st[0] = n
            st[1] = mean_a + delta * n_b / n
            st[2] = m2_a + m2_b + delta * delta * n_a * n_b / n

    def consume(self, batches) -> "MomentAccumulator":
        for t, s, err in batches:
            self.add(t, s, err)
        return self

    def result(self, t: int, s: int, order: int) -> MomentEstimate:
        n, mean, m2 = self._state[(t, s, order)]
        se = float(np.sqrt(m2 / (n - 1) / n)) if n > 1 else float("nan")
        return MomentEstimate(moment=mean, stderr=se, trials=n, samples=self._samples[(t, s)])


def measure_point_moments(v, queries, setup, orders=(2,)) -> MomentAccumulator:
    return MomentAccumulator(orders).consume(point_error_batches(v, queries, setup))


def measure_inner_moments(v, w, setup, orders=(2,)) -> MomentAccumulator:
    return MomentAccumulator(orders).consume(inner_error_batches(v, w, setup))


__all__ = [
    "FULLY_RANDOM", "MULTIPLY_SHIFT", "NUMBA", "NUMPY", "MomentAccumulator", "MomentEstimate",
    "QueryPlan", "RandomRowMaps", "SimulationSetup", "inner_error_batches", "measure_inner_moments",
    "measure_point_moments", "point_error_batches", "trial_seeds",
]
