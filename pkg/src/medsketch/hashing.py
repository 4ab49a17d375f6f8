"""Seedable hash families for CountSketch rows.

Two families are provided:

* multiply-add-shift (Dietzfelbinger), used for bucket hashes and for the
  default pairwise sign hash.  A 64-bit key is split into two 32-bit words
  ``(lo, hi)`` and hashed as ``((a*lo + a_hi*hi + b) mod 2**64) >> (64 - l)``.
  For keys below ``2**32`` this is the textbook strongly universal scheme.
* a degree-3 polynomial over the Mersenne prime ``2**61 - 1``, used for the
  4-wise independent sign hash.  The sign is the low bit of the value.

Every parameter is derived from a 64-bit seed with SplitMix64.  Output ``k``
(zero-based) of the stream seeded with ``seed`` is
``mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)``.  A sketch with ``R`` rows
consumes ``DRAWS_PER_ROW * R`` outputs; row ``r`` owns outputs
``7r .. 7r+6`` laid out as::

    7r+0  bucket multiplier for the low word (forced odd)
    7r+1  bucket multiplier for the high word
    7r+2  bucket addend
    7r+3..7r+5  pairwise sign hash (same layout as the bucket hash)
    7r+3..7r+6  4-wise sign hash coefficients c0..c3, each ``out >> 3``
                (``p`` itself maps to 0)

All evaluation functions are numpy-vectorized and broadcast parameters
against keys, so a single code path serves one sketch and a batch of a
million Monte-Carlo sketches alike.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MERSENNE_61 = (1 << 61) - 1
DRAWS_PER_ROW = 7
MAX_OUT_BITS = 30

_U32 = np.uint64(0xFFFFFFFF)
_P = np.uint64(MERSENNE_61)
_M29 = np.uint64((1 << 29) - 1)


class SignFamily(str, enum.Enum):
    PAIRWISE = "pairwise"
    FOURWISE = "fourwise"

    @property
    def code(self) -> int:
        return 0 if self is SignFamily.PAIRWISE else 1

    @classmethod
    def from_code(cls, code: int) -> "SignFamily":
        if code == 0:
            return cls.PAIRWISE
        if code == 1:
            return cls.FOURWISE
        raise ValueError(f"unknown sign family code {code}")


def mix64(z) -> np.ndarray:
    """SplitMix64 output function (a bijection on 64-bit words)."""
    z = np.array(z, dtype=np.uint64)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def splitmix64_stream(seed, n: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start+n-1`` of the SplitMix64 stream for each seed.

    ``seed`` may be an int or an array; the result has shape
    ``np.shape(seed) + (n,)``.
    """
    seed = np.asarray(seed, dtype=np.uint64)[..., None]
    k = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    return mix64(seed + k * np.uint64(GOLDEN_GAMMA))


def log2_exact(s: int) -> int:
    """``log2(s)`` for a power of two in ``[2, 2**30]``; ValueError otherwise."""
    if isinstance(s, bool) or not isinstance(s, (int, np.integer)):
        raise ValueError(f"column count must be an integer, got {s!r}")
    s = int(s)
    if s < 2 or s & (s - 1) or s > (1 << MAX_OUT_BITS):
        raise ValueError(f"column count must be a power of two in [2, 2**30], got {s}")
    return s.bit_length() - 1


def split_keys(keys) -> tuple[np.ndarray, np.ndarray]:
    """Split 64-bit keys into (low, high) 32-bit words as uint64 arrays."""
    if isinstance(keys, np.ndarray):
        if keys.dtype != np.uint64:
            if keys.size and np.issubdtype(keys.dtype, np.signedinteger) and keys.min() < 0:
                raise ValueError("keys must be non-negative")
            keys = keys.astype(np.uint64)
    else:
        try:
            keys = np.array(keys, dtype=np.uint64)
        except OverflowError as exc:
            raise ValueError(f"keys must be unsigned 64-bit integers: {keys!r}") from exc
    return keys & _U32, keys >> np.uint64(32)


def multiply_add_shift(a_lo, a_hi, b, key_lo, key_hi, out_bits: int) -> np.ndarray:
    """Top ``out_bits`` bits of ``(a_lo*lo + a_hi*hi + b) mod 2**64``.

    The high-word product is skipped when every key fits in 32 bits.
    """
    acc = np.multiply(a_lo, key_lo)
    acc += b
    if np.any(key_hi):
        acc += a_hi * key_hi
    acc >>= np.uint64(64 - out_bits)
    return acc


def mulmod61(x, y) -> np.ndarray:
    """``x*y mod (2**61 - 1)`` for uint64 operands already reduced mod p."""
    x_lo, x_hi = x & _U32, x >> np.uint64(32)
    y_lo, y_hi = y & _U32, y >> np.uint64(32)
    hh = x_hi * y_hi  # < 2**58, weight 2**64 == 8 (mod p)
    mid = x_hi * y_lo + x_lo * y_hi  # < 2**62, weight 2**32
    ll = x_lo * y_lo  # full 64 bits
    acc = (
        (hh << np.uint64(3))
        + (mid >> np.uint64(29))
        + ((mid & _M29) << np.uint64(32))
        + (ll & _P)
        + (ll >> np.uint64(61))
    )
    return _reduce61(acc)


def _reduce61(acc) -> np.ndarray:
    acc = (acc & _P) + (acc >> np.uint64(61))
    return np.where(acc >= _P, acc - _P, acc)


def poly61(c0, c1, c2, c3, x) -> np.ndarray:
    """Horner evaluation of ``c3 x^3 + c2 x^2 + c1 x + c0`` mod ``2**61 - 1``."""
    acc = _reduce61(mulmod61(c3, x) + c2)
    acc = _reduce61(mulmod61(acc, x) + c1)
    return _reduce61(mulmod61(acc, x) + c0)


def _bits_to_sign(bits) -> np.ndarray:
    # bit 1 -> +1, bit 0 -> -1
    out = bits.astype(np.float64)
    out *= 2.0
    out -= 1.0
    return out


def _check_fourwise_keys(keys) -> None:
    k = np.asarray(keys, dtype=np.uint64)
    if k.size and np.any(k >= _P):
        raise ValueError("4-wise sign hash requires keys below 2**61 - 1")


def _coeff61(draw) -> np.ndarray:
    c = np.asarray(draw, dtype=np.uint64) >> np.uint64(3)
    return np.where(c == _P, np.uint64(0), c)


@dataclass(frozen=True)
class BucketHash:
    """Multiply-add-shift hash into ``[0, 2**out_bits)``."""

    multiplier_a: int
    addend_b: int
    out_bits: int
    multiplier_hi: int = 0

    def __post_init__(self):
        if not self.multiplier_a & 1:
            raise ValueError("multiplier_a must be odd")
        if not 1 <= self.out_bits <= MAX_OUT_BITS:
            raise ValueError(f"out_bits must be in [1, {MAX_OUT_BITS}], got {self.out_bits}")

    def __call__(self, keys):
        scalar = np.ndim(keys) == 0
        lo, hi = split_keys(np.atleast_1d(keys) if scalar else keys)
        out = multiply_add_shift(
            np.uint64(self.multiplier_a), np.uint64(self.multiplier_hi),
            np.uint64(self.addend_b), lo, hi, self.out_bits,
        )
        return int(out[0]) if scalar else out.astype(np.int64)


@dataclass(frozen=True)
class SignHashPairwise:
    """Multiply-add-shift with one output bit, mapped to {-1, +1}."""

    multiplier_a: int
    addend_b: int
    multiplier_hi: int = 0

    @property
    def out_bits(self) -> int:
        return 1

    def __call__(self, keys):
        scalar = np.ndim(keys) == 0
        lo, hi = split_keys(np.atleast_1d(keys) if scalar else keys)
        bits = multiply_add_shift(
            np.uint64(self.multiplier_a), np.uint64(self.multiplier_hi),
            np.uint64(self.addend_b), lo, hi, 1,
        )
        out = _bits_to_sign(bits)
        return int(out[0]) if scalar else out


@dataclass(frozen=True)
class SignHashFourwise:
    """Degree-3 polynomial over GF(2**61 - 1); sign from the low bit."""

    coeffs: tuple[int, int, int, int]

    def __post_init__(self):
        if len(self.coeffs) != 4 or any(not 0 <= c < MERSENNE_61 for c in self.coeffs):
            raise ValueError("need four coefficients in [0, 2**61 - 1)")

    def __call__(self, keys):
        scalar = np.ndim(keys) == 0
        x = np.array(keys, dtype=np.uint64, ndmin=1)
        _check_fourwise_keys(x)
        c = [np.uint64(v) for v in self.coeffs]
        out = _bits_to_sign(poly61(*c, x) & np.uint64(1))
        return int(out[0]) if scalar else out


def new_bucket_hash(seed: int, s: int) -> BucketHash:
    """Bucket hash onto ``s`` columns from the first three outputs of ``seed``."""
    out_bits = log2_exact(s)
    a, a_hi, b = (int(x) for x in splitmix64_stream(seed, 3))
    return BucketHash(multiplier_a=a | 1, addend_b=b, out_bits=out_bits, multiplier_hi=a_hi)


def new_sign_pairwise(seed: int) -> SignHashPairwise:
    a, a_hi, b = (int(x) for x in splitmix64_stream(seed, 3))
    return SignHashPairwise(multiplier_a=a | 1, addend_b=b, multiplier_hi=a_hi)


def new_sign_fourwise(seed: int) -> SignHashFourwise:
    draws = splitmix64_stream(seed, 4)
    return SignHashFourwise(tuple(int(c) for c in _coeff61(draws)))


def bucket(h: BucketHash, key):
    return h(key)


def sign_pairwise(g: SignHashPairwise, key):
    return g(key)


def sign_fourwise(g: SignHashFourwise, key):
    return g(key)


class RowHashes:
    """Per-row hash parameters for one sketch or a batch of sketches.

    Parameter arrays have shape ``seeds.shape + (rows,)``.  ``bucket`` and
    ``sign`` append a trailing key axis: keys of shape ``(K,)`` give results
    of shape ``seeds.shape + (rows, K)``; keys shaped ``(N, 1, Q)`` against a
    batch of ``N`` seeds give ``(N, rows, Q)``.
    """

    def __init__(self, seeds, rows: int, family: SignFamily):
        family = SignFamily(family)
        draws = splitmix64_stream(seeds, DRAWS_PER_ROW * rows)
        draws = draws.reshape(draws.shape[:-1] + (rows, DRAWS_PER_ROW))
        self.rows = rows
        self.family = family
        self.bucket_a = draws[..., 0] | np.uint64(1)
        self.bucket_a_hi = draws[..., 1]
        self.bucket_b = draws[..., 2]
        if family is SignFamily.PAIRWISE:
            self.sign_params = (draws[..., 3] | np.uint64(1), draws[..., 4], draws[..., 5])
        else:
            self.sign_params = tuple(_coeff61(draws[..., 3 + i]) for i in range(4))

    def bucket(self, keys, out_bits: int) -> np.ndarray:
        lo, hi = split_keys(keys)
        return multiply_add_shift(
            self.bucket_a[..., None], self.bucket_a_hi[..., None], self.bucket_b[..., None],
            lo, hi, out_bits,
        )

    def sign(self, keys) -> np.ndarray:
        if self.family is SignFamily.PAIRWISE:
            a, a_hi, b = (p[..., None] for p in self.sign_params)
            lo, hi = split_keys(keys)
            return _bits_to_sign(multiply_add_shift(a, a_hi, b, lo, hi, 1))
        _check_fourwise_keys(keys)
        x = np.asarray(keys, dtype=np.uint64)
        c = [p[..., None] for p in self.sign_params]
        return _bits_to_sign(poly61(*c, x) & np.uint64(1))

    def bucket_hash(self, row: int, out_bits: int) -> BucketHash:
        """The scalar ``BucketHash`` of one row (single-sketch instances only)."""
        return BucketHash(
            multiplier_a=int(self.bucket_a[row]), addend_b=int(self.bucket_b[row]),
            out_bits=out_bits, multiplier_hi=int(self.bucket_a_hi[row]),
        )

    def sign_hash(self, row: int):
        if self.family is SignFamily.PAIRWISE:
            a, a_hi, b = (int(p[row]) for p in self.sign_params)
            return SignHashPairwise(multiplier_a=a, addend_b=b, multiplier_hi=a_hi)
        return SignHashFourwise(tuple(int(p[row]) for p in self.sign_params))
