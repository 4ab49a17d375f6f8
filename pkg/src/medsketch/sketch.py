"""CountSketch: turnstile updates, median point queries and inner products.

The table has ``2t - 1`` rows and ``s`` columns.  Row ``i`` hashes key ``j``
to column ``h_i(j)`` with sign ``g_i(j)``; an update ``(j, delta)`` adds
``g_i(j) * delta`` to ``table[i, h_i(j)]`` in every row.  A point query
returns the median of the row estimates ``g_i(j) * table[i, h_i(j)]``.  Two
sketches built with the same parameters estimate ``<v, w>`` by the median of
the row-wise dot products.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .hashing import MASK64, RowHashes, SignFamily, log2_exact
from .median import median_odd

MAGIC = b"CSK1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHBBQ")
HEADER_SIZE = _HEADER.size  # 18


class SketchError(ValueError):
    """Base class for sketch errors."""


class ParamsMismatchError(SketchError):
    """Two sketches do not share parameters (including the master seed)."""


class SketchFormatError(SketchError):
    """Malformed serialized sketch."""


class BadMagicError(SketchFormatError):
    pass


class VersionMismatchError(SketchFormatError):
    pass


class TruncatedSketchError(SketchFormatError):
    pass


class SparseVector:
    """An index -> value map with zeros omitted.

    Indices are unsigned 64-bit integers.  ``keys`` and ``values`` give the
    entries as arrays in ascending index order.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        acc: dict[int, float] = {}
        for k, v in items:
            k = int(k)
            if not 0 <= k <= MASK64:
                raise ValueError(f"index {k} is not an unsigned 64-bit integer")
            acc[k] = acc.get(k, 0.0) + float(v)
        self._entries = {k: acc[k] for k in sorted(acc) if acc[k] != 0.0}

    @classmethod
    def from_arrays(cls, keys, values) -> "SparseVector":
        return cls(zip(np.asarray(keys).tolist(), np.asarray(values, dtype=np.float64).tolist()))

    @property
    def entries(self) -> dict[int, float]:
        return dict(self._entries)

    @property
    def keys(self) -> np.ndarray:
        return np.array(list(self._entries), dtype=np.uint64)

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self._entries.values()), dtype=np.float64)

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, index: int) -> float:
        return self._entries.get(int(index), 0.0)

    def __iter__(self):
        return iter(self._entries.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self) -> str:
        return f"SparseVector({self._entries!r})"

    def __add__(self, other: "SparseVector") -> "SparseVector":
        return SparseVector(list(self) + list(other))

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self + other.scale(-1.0)

    def scale(self, alpha: float) -> "SparseVector":
        return SparseVector((k, alpha * v) for k, v in self)

    def dot(self, other: "SparseVector") -> float:
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        return math.fsum(v * big[k] for k, v in small)

    def l1(self) -> float:
        return math.fsum(abs(v) for v in self._entries.values())

    def l2(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self._entries.values()))

    def linf(self) -> float:
        return max((abs(v) for v in self._entries.values()), default=0.0)


@dataclass(frozen=True)
class SketchParams:
    """CountSketch configuration.

    ``l2_inner=True`` declares that the sketch will be used for inner
    products with the L2 error guarantee, which needs 4-wise independent
    signs; it is rejected unless ``sign_family`` is ``FOURWISE``.
    """

    t: int
    s: int
    master_seed: int = 0
    sign_family: SignFamily = SignFamily.PAIRWISE
    l2_inner: bool = field(default=False, compare=False)

    def __post_init__(self):
        if isinstance(self.t, bool) or not isinstance(self.t, (int, np.integer)):
            raise ValueError(f"t must be an integer, got {self.t!r}")
        if not 1 <= self.t <= 0xFFFF:
            raise ValueError(f"t must be in [1, 65535], got {self.t}")
        log2_exact(self.s)
        if not 0 <= int(self.master_seed) <= MASK64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "t", int(self.t))
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "master_seed", int(self.master_seed))
        object.__setattr__(self, "sign_family", SignFamily(self.sign_family))
        if self.l2_inner and self.sign_family is not SignFamily.FOURWISE:
            raise ValueError("l2_inner requires the fourwise sign family")

    @property
    def rows(self) -> int:
        return 2 * self.t - 1

    @property
    def log2_s(self) -> int:
        return log2_exact(self.s)


class CountSketch:
    """A ``(2t-1) x s`` CountSketch with double-precision accumulators."""

    def __init__(self, params: SketchParams):
        self.params = params
        self.table = np.zeros((params.rows, params.s), dtype=np.float64)
        self.hashes = RowHashes(params.master_seed, params.rows, params.sign_family)
        self._row_idx = np.arange(params.rows)

    def __repr__(self) -> str:
        p = self.params
        return f"CountSketch(t={p.t}, s={p.s}, seed={p.master_seed:#x}, {p.sign_family.value})"

    def _cells(self, keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cols = self.hashes.bucket(keys, self.params.log2_s).astype(np.intp)
        return cols, self.hashes.sign(keys)

    def row_hashes(self) -> list:
        """Per-row ``(BucketHash, sign hash)`` pairs."""
        return [
            (self.hashes.bucket_hash(r, self.params.log2_s), self.hashes.sign_hash(r))
            for r in range(self.params.rows)
        ]

    def update(self, index: int, delta: float) -> None:
        cols, signs = self._cells(np.array([index], dtype=np.uint64))
        self.table[self._row_idx, cols[:, 0]] += signs[:, 0] * float(delta)

    def update_many(self, indices, deltas) -> None:
        """Apply updates in the given order (same result as repeated ``update``)."""
        keys = np.asarray(indices, dtype=np.uint64).ravel()
        deltas = np.asarray(deltas, dtype=np.float64).ravel()
        if keys.shape != deltas.shape:
            raise ValueError("indices and deltas differ in length")
        if keys.size == 0:
            return
        cols, signs = self._cells(keys)
        rows = np.broadcast_to(self._row_idx[:, None], cols.shape)
        # unbuffered: every cell receives its contributions in input order
        np.add.at(self.table, (rows, cols), signs * deltas)

    def point_estimate_row(self, row: int, index: int) -> float:
        if not 0 <= row < self.params.rows:
            raise IndexError(f"row {row} out of range for {self.params.rows} rows")
        key = np.array([index], dtype=np.uint64)
        col = int(self.hashes.bucket(key, self.params.log2_s)[row, 0])
        return float(self.hashes.sign(key)[row, 0] * self.table[row, col])

    def row_estimates(self, index: int) -> np.ndarray:
        cols, signs = self._cells(np.array([index], dtype=np.uint64))
        return signs[:, 0] * self.table[self._row_idx, cols[:, 0]]

    def point_query(self, index: int) -> float:
        return median_odd(self.row_estimates(index))

    def row_inner_products(self, other: "CountSketch") -> np.ndarray:
        self._check_compatible(other)
        return np.einsum("ij,ij->i", self.table, other.table)

    def inner_product(self, other: "CountSketch") -> float:
        return median_odd(self.row_inner_products(other))

    def _check_compatible(self, other: "CountSketch") -> None:
        if self.params != other.params:
            raise ParamsMismatchError(f"incompatible sketches: {self.params} vs {other.params}")

    def copy(self) -> "CountSketch":
        out = CountSketch.__new__(CountSketch)
        out.params, out.hashes, out._row_idx = self.params, self.hashes, self._row_idx
        out.table = self.table.copy()
        return out

    def __add__(self, other: "CountSketch") -> "CountSketch":
        self._check_compatible(other)
        out = self.copy()
        out.table += other.table
        return out

    def __sub__(self, other: "CountSketch") -> "CountSketch":
        self._check_compatible(other)
        out = self.copy()
        out.table -= other.table
        return out

    def scale(self, alpha: float) -> "CountSketch":
        out = self.copy()
        out.table *= float(alpha)
        return out

    def serialize(self) -> bytes:
        p = self.params
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, p.t, p.log2_s, p.sign_family.code, p.master_seed)
        return header + self.table.astype("<f8", copy=False).tobytes(order="C")

    @classmethod
    def deserialize(cls, data: bytes) -> "CountSketch":
        data = bytes(data)
        if len(data) < 4 or data[:4] != MAGIC:
            raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
        if len(data) < HEADER_SIZE:
            raise TruncatedSketchError(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
        _, version, t, log2_s, family, seed = _HEADER.unpack_from(data)
        if version != FORMAT_VERSION:
            raise VersionMismatchError(f"unsupported format version {version}")
        try:
            params = SketchParams(t=t, s=1 << log2_s, master_seed=seed,
                                  sign_family=SignFamily.from_code(family))
        except ValueError as exc:
            raise SketchFormatError(f"invalid header: {exc}") from exc
        expected = HEADER_SIZE + 8 * params.rows * params.s
        if len(data) < expected:
            raise TruncatedSketchError(f"expected {expected} bytes, got {len(data)}")
        if len(data) > expected:
            raise SketchFormatError(f"{len(data) - expected} trailing bytes after table")
        sk = cls(params)
        sk.table[:] = np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE).reshape(params.rows, params.s)
        return sk


def new_sketch(params: SketchParams) -> CountSketch:
    return CountSketch(params)


def from_vector(v: SparseVector, params: SketchParams) -> CountSketch:
    """Sketch of ``v``, updating entries in ascending index order."""
    sk = CountSketch(params)
    sk.update_many(v.keys, v.values)
    return sk


def add(a: CountSketch, b: CountSketch) -> CountSketch:
    return a + b


def scale(sk: CountSketch, alpha: float) -> CountSketch:
    return sk.scale(alpha)


def inner_product(a: CountSketch, b: CountSketch) -> float:
    return a.inner_product(b)


def serialize(sk: CountSketch) -> bytes:
    return sk.serialize()


def deserialize(data: bytes) -> CountSketch:
    return CountSketch.deserialize(data)
