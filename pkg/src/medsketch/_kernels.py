"""Fused numba kernels for batched multiply-shift sketches.

Same hash layout as ``hashing.RowHashes``; each row's table is accumulated
in support-key order, so every row estimate is bit-identical to the one an
explicit ``CountSketch`` with that master seed returns.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_P = np.uint64((1 << 61) - 1)
_U32 = np.uint64(0xFFFFFFFF)
_M29 = np.uint64((1 << 29) - 1)
_ONE = np.uint64(1)
_DRAWS = 7


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _draw(seed, k):
    return _mix64(seed + np.uint64(k + 1) * _GAMMA)


@njit(cache=True, inline="always")
def _reduce61(acc):
    acc = (acc & _P) + (acc >> np.uint64(61))
    if acc >= _P:
        acc -= _P
    return acc


@njit(cache=True, inline="always")
def _mulmod61(x, y):
    x_lo = x & _U32
    x_hi = x >> np.uint64(32)
    y_lo = y & _U32
    y_hi = y >> np.uint64(32)
    hh = x_hi * y_hi
    mid = x_hi * y_lo + x_lo * y_hi
    ll = x_lo * y_lo
    acc = (hh << np.uint64(3)) + (mid >> np.uint64(29)) + ((mid & _M29) << np.uint64(32))
    acc += (ll & _P) + (ll >> np.uint64(61))
    return _reduce61(acc)


@njit(cache=True, inline="always")
def _coeff(d):
    c = d >> np.uint64(3)
    if c == _P:
        c = np.uint64(0)
    return c


@njit(cache=True)
def _row_params(seed, r, fourwise, params):
    base = _DRAWS * r
    params[0] = _draw(seed, base) | _ONE
    params[1] = _draw(seed, base + 1)
    params[2] = _draw(seed, base + 2)
    if fourwise:
        for i in range(4):
            params[3 + i] = _coeff(_draw(seed, base + 3 + i))
    else:
        params[3] = _draw(seed, base + 3) | _ONE
        params[4] = _draw(seed, base + 4)
        params[5] = _draw(seed, base + 5)


@njit(cache=True, inline="always")
def _word(a_lo, a_hi, b, key):
    return a_lo * (key & _U32) + a_hi * (key >> np.uint64(32)) + b


@njit(cache=True, inline="always")
def _sign(params, fourwise, key):
    if fourwise:
        acc = _reduce61(_mulmod61(params[6], key) + params[5])
        acc = _reduce61(_mulmod61(acc, key) + params[4])
        acc = _reduce61(_mulmod61(acc, key) + params[3])
        bit = acc & _ONE
    else:
        bit = _word(params[3], params[4], params[5], key) >> np.uint64(63)
    return 2.0 * np.float64(bit) - 1.0


@njit(cache=True)
def _hash_support(params, fourwise, keys, vals, words, gv):
    for k in range(keys.size):
        words[k] = _word(params[0], params[1], params[2], keys[k])
        gv[k] = _sign(params, fourwise, keys[k]) * vals[k]


@njit(cache=True)
def point_rows(seeds, rows, fourwise, keys, vals, qkeys, shifts, out):
    """``out[si, n, r, q]``: row-``r`` estimate of ``qkeys[n or 0, q]`` at shift ``shifts[si]``."""
    n_trials = seeds.size
    K = keys.size
    Q = qkeys.shape[1]
    shared = qkeys.shape[0] == 1
    params = np.empty(7, dtype=np.uint64)
    words = np.empty(K, dtype=np.uint64)
    gv = np.empty(K, dtype=np.float64)
    qwords = np.empty(Q, dtype=np.uint64)
    qsign = np.empty(Q, dtype=np.float64)
    for n in range(n_trials):
        qrow = 0 if shared else n
        for r in range(rows):
            _row_params(seeds[n], r, fourwise, params)
            _hash_support(params, fourwise, keys, vals, words, gv)
            for q in range(Q):
                key = qkeys[qrow, q]
                qwords[q] = _word(params[0], params[1], params[2], key)
                qsign[q] = _sign(params, fourwise, key)
            for si in range(shifts.size):
                sh = shifts[si]
                for q in range(Q):
                    hq = qwords[q] >> sh
                    acc = 0.0
                    for k in range(K):
                        if (words[k] >> sh) == hq:
                            acc += gv[k]
                    out[si, n, r, q] = qsign[q] * acc


@njit(cache=True)
def point_rows_table(seeds, rows, fourwise, keys, vals, qkeys, shifts, max_cols, out):
    """As ``point_rows`` but through a per-row table; cheaper when ``K*Q`` is large."""
    n_trials = seeds.size
    K = keys.size
    Q = qkeys.shape[1]
    shared = qkeys.shape[0] == 1
    params = np.empty(7, dtype=np.uint64)
    words = np.empty(K, dtype=np.uint64)
    gv = np.empty(K, dtype=np.float64)
    table = np.zeros(max_cols, dtype=np.float64)
    for n in range(n_trials):
        qrow = 0 if shared else n
        for r in range(rows):
            _row_params(seeds[n], r, fourwise, params)
            _hash_support(params, fourwise, keys, vals, words, gv)
            for si in range(shifts.size):
                sh = shifts[si]
                for k in range(K):
                    table[words[k] >> sh] += gv[k]
                for q in range(Q):
                    key = qkeys[qrow, q]
                    col = _word(params[0], params[1], params[2], key) >> sh
                    out[si, n, r, q] = _sign(params, fourwise, key) * table[col]
                for k in range(K):
                    table[words[k] >> sh] = 0.0


@njit(cache=True)
def inner_rows(seeds, rows, fourwise, v_keys, v_vals, w_keys, w_vals, shifts, max_cols, out):
    """``out[si, n, r]``: row-``r`` dot product of the two sketches at shift ``shifts[si]``."""
    n_trials = seeds.size
    Kv = v_keys.size
    Kw = w_keys.size
    params = np.empty(7, dtype=np.uint64)
    v_words = np.empty(Kv, dtype=np.uint64)
    v_gv = np.empty(Kv, dtype=np.float64)
    w_words = np.empty(Kw, dtype=np.uint64)
    w_gv = np.empty(Kw, dtype=np.float64)
    tv = np.zeros(max_cols, dtype=np.float64)
    tw = np.zeros(max_cols, dtype=np.float64)
    for n in range(n_trials):
        for r in range(rows):
            _row_params(seeds[n], r, fourwise, params)
            _hash_support(params, fourwise, v_keys, v_vals, v_words, v_gv)
            _hash_support(params, fourwise, w_keys, w_vals, w_words, w_gv)
            for si in range(shifts.size):
                sh = shifts[si]
                for k in range(Kv):
                    tv[v_words[k] >> sh] += v_gv[k]
                for k in range(Kw):
                    tw[w_words[k] >> sh] += w_gv[k]
                # only columns touched by w contribute; zero each after its first visit
                acc = 0.0
                for k in range(Kw):
                    col = w_words[k] >> sh
                    if tw[col] != 0.0:
                        acc += tv[col] * tw[col]
                        tw[col] = 0.0
                out[si, n, r] = acc
                for k in range(Kv):
                    tv[v_words[k] >> sh] = 0.0
                for k in range(Kw):
                    tw[w_words[k] >> sh] = 0.0
