"""Input vectors: Zipfian, one-hot and disjoint synthetics, count and transaction files.

Dataset strings::

    zipf:N:ALPHA       rank-k entry k**-ALPHA / sum_j j**-ALPHA at index k-1
    onehot:D:I         a single 1 at index I of a D-dimensional vector
    disjoint:NNZ       pair with entries 1/NNZ on [0, NNZ) and [NNZ, 2 NNZ)
    counts:PATH        lines "index count"
    transactions:PATH  lines of space-separated item ids, aggregated to counts

All generators are deterministic.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sketch import SparseVector

KINDS = ("zipf", "onehot", "disjoint", "counts", "transactions")
QUERY_MODES = ("support", "all", "off")
MAX_ALL_INDICES = 10**7


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    """A parsed dataset string; ``normalize`` rescales file data to L1 = 1."""

    kind: str
    n: int = 0
    alpha: float = 0.0
    index: int = 0
    path: str = ""
    normalize: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DatasetError(f"unknown dataset kind {self.kind!r}")
        if self.kind in ("zipf", "onehot", "disjoint") and self.n < 1:
            raise DatasetError(f"{self.kind}: size must be >= 1, got {self.n}")
        if self.kind == "zipf" and not self.alpha > 0:
            raise DatasetError(f"zipf: alpha must be > 0, got {self.alpha}")
        if self.kind == "onehot" and not 0 <= self.index < self.n:
            raise DatasetError(f"onehot: index {self.index} out of range for dimension {self.n}")
        if self.kind in ("counts", "transactions") and not self.path:
            raise DatasetError(f"{self.kind}: missing path")

    @property
    def tag(self) -> str:
        if self.kind == "zipf":
            return f"zipf:{self.n}:{self.alpha:g}"
        if self.kind == "onehot":
            return f"onehot:{self.n}:{self.index}"
        if self.kind == "disjoint":
            return f"disjoint:{self.n}"
        return f"{self.kind}:{Path(self.path).name}"

    @property
    def is_pair(self) -> bool:
        return self.kind == "disjoint"

    @property
    def is_file(self) -> bool:
        return self.kind in ("counts", "transactions")


def _int_field(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise DatasetError(f"{what} must be an integer, got {text!r}") from None


def parse_dataset(text: str, normalize: bool = True) -> DatasetSpec:
    kind, _, rest = text.partition(":")
    parts = rest.split(":") if rest else []
    if kind == "zipf":
        if len(parts) != 2:
            raise DatasetError("expected zipf:N:ALPHA")
        try:
            alpha = float(parts[1])
        except ValueError:
            raise DatasetError(f"alpha must be a number, got {parts[1]!r}") from None
        return DatasetSpec("zipf", n=_int_field(parts[0], "N"), alpha=alpha)
    if kind == "onehot":
        if len(parts) != 2:
            raise DatasetError("expected onehot:D:I")
        return DatasetSpec("onehot", n=_int_field(parts[0], "D"), index=_int_field(parts[1], "I"))
    if kind == "disjoint":
        if len(parts) != 1:
            raise DatasetError("expected disjoint:NNZ")
        return DatasetSpec("disjoint", n=_int_field(parts[0], "NNZ"))
    if kind in ("counts", "transactions"):
        if not rest:
            raise DatasetError(f"expected {kind}:PATH")
        return DatasetSpec(kind, path=rest, normalize=normalize)
    raise DatasetError(f"unknown dataset {text!r}; kinds are {', '.join(KINDS)}")


def zipf_vector(n: int, alpha: float) -> SparseVector:
    if n < 1:
        raise DatasetError(f"n must be >= 1, got {n}")
    if not alpha > 0:
        raise DatasetError(f"alpha must be > 0, got {alpha}")
    weights = np.arange(1, n + 1, dtype=np.float64) ** -float(alpha)
    return SparseVector.from_arrays(np.arange(n), weights / math.fsum(weights))


def one_hot(d: int, i: int) -> SparseVector:
    if not 0 <= i < d:
        raise DatasetError(f"index {i} out of range for dimension {d}")
    return SparseVector({i: 1.0})


def disjoint_pair(nnz: int) -> tuple[SparseVector, SparseVector]:
    if nnz < 1:
        raise DatasetError(f"nnz must be >= 1, got {nnz}")
    val = 1.0 / nnz
    return (
        SparseVector((i, val) for i in range(nnz)),
        SparseVector((i, val) for i in range(nnz, 2 * nnz)),
    )


def normalize_l1(v: SparseVector) -> SparseVector:
    total = v.l1()
    if total == 0.0:
        raise DatasetError("cannot normalize a zero vector")
    return SparseVector((k, x / total) for k, x in v)


def load_counts(path) -> SparseVector:
    """Read ``index count`` lines; blank lines and ``#`` comments are skipped."""
    entries: list[tuple[int, float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 2:
                raise DatasetError(f"{path}:{lineno}: expected 'index count', got {line!r}")
            try:
                idx = int(fields[0])
                count = float(fields[1])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: cannot parse {line!r}") from None
            if idx < 0:
                raise DatasetError(f"{path}:{lineno}: negative index {idx}")
            if not math.isfinite(count):
                raise DatasetError(f"{path}:{lineno}: non-finite count {fields[1]!r}")
            entries.append((idx, count))
    if not entries:
        raise DatasetError(f"{path}: no entries")
    return SparseVector(entries)


def load_transactions(path) -> SparseVector:
    """Occurrence counts of item ids over all transactions (one per line)."""
    counts: Counter[int] = Counter()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                items = [int(tok) for tok in line.split()]
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-integer item in {line.strip()!r}") from None
            if any(i < 0 for i in items):
                raise DatasetError(f"{path}:{lineno}: negative item id")
            counts.update(items)
    if not counts:
        raise DatasetError(f"{path}: no items")
    return SparseVector((k, float(c)) for k, c in counts.items())


def write_counts(v: SparseVector, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for k, x in v:
            fh.write(f"{k} {int(x) if x.is_integer() else repr(x)}\n")


@dataclass(frozen=True)
class Dataset:
    """Loaded vectors with the dimension used for ``all``-index queries."""

    tag: str
    vectors: tuple[SparseVector, ...]
    dimension: int

    @property
    def vector(self) -> SparseVector:
        return self.vectors[0]

    @property
    def items(self) -> int:
        return max(len(v) for v in self.vectors)


def load(spec: DatasetSpec) -> Dataset:
    if spec.kind == "zipf":
        return Dataset(spec.tag, (zipf_vector(spec.n, spec.alpha),), spec.n)
    if spec.kind == "onehot":
        return Dataset(spec.tag, (one_hot(spec.n, spec.index),), spec.n)
    if spec.kind == "disjoint":
        return Dataset(spec.tag, disjoint_pair(spec.n), 2 * spec.n)
    try:
        v = load_counts(spec.path) if spec.kind == "counts" else load_transactions(spec.path)
    except OSError as exc:
        raise DatasetError(f"cannot read {spec.path}: {exc.strerror or exc}") from exc
    if spec.normalize:
        v = normalize_l1(v)
    return Dataset(spec.tag, (v,), int(v.keys.max()) + 1 if len(v) else 0)


def default_query_mode(spec: DatasetSpec) -> str:
    # a one-hot vector's error lives entirely on the indices it does not hold
    return "off" if spec.kind == "onehot" else "support"


def query_candidates(data: Dataset, mode: str) -> np.ndarray:
    """Indices to sample queries from: the support, all of ``[d]``, or ``[d]`` minus the support."""
    if mode not in QUERY_MODES:
        raise DatasetError(f"unknown query mode {mode!r}; choose from {', '.join(QUERY_MODES)}")
    support = data.vector.keys
    if mode == "support":
        return support
    if data.dimension > MAX_ALL_INDICES:
        raise DatasetError(f"dimension {data.dimension} too large for query mode {mode!r}")
    everything = np.arange(data.dimension, dtype=np.uint64)
    if mode == "all":
        return everything
    return np.setdiff1d(everything, support)
