"""Numba kernel backend.

Per-element field arithmetic compiled with ``@njit``; batches run under
``prange``.  Uses the same limb representation and operation sequence as
the numpy backend, so the two are interchangeable and cross-checkable.
"""

from __future__ import annotations

import warnings

import numpy as np
from numba import njit, prange

# numba probes TBB when the parallel runtime starts and warns if the system
# TBB predates its floor; the omp/workqueue layers serve instead
warnings.filterwarnings("ignore", message="The TBB threading layer requires")

from .limbs import (
    A24,
    EXP_P_MINUS_2,
    FOLD,
    LIMBS,
    MASK,
    P_LIMBS,
    RADIX,
    SUBPAD,
    TOP_SHIFT,
)

name = "numba"

_WIDE = 2 * LIMBS - 1


@njit(cache=True)
def _reduce(t):
    # fold product limbs: 2^(LIMBS*RADIX) = FOLD mod p
    for k in range(LIMBS, _WIDE):
        t[k - LIMBS] += FOLD * t[k]
        t[k] = 0
    # two carry passes; overflow past the top folds back times FOLD (limb 0
    # may end slightly above the radix, which every op here tolerates)
    for _ in range(2):
        c = np.int64(0)
        for i in range(LIMBS):
            v = t[i] + c
            t[i] = v & MASK
            c = v >> RADIX
        t[0] += FOLD * c


@njit(cache=True)
def _mul(a, b, t, out):
    for k in range(_WIDE):
        t[k] = 0
    for i in range(LIMBS):
        ai = a[i]
        for j in range(LIMBS):
            t[i + j] += ai * b[j]
    _reduce(t)
    for i in range(LIMBS):
        out[i] = t[i]


@njit(cache=True)
def _sqr(a, t, out):
    for k in range(_WIDE):
        t[k] = 0
    for i in range(LIMBS):
        ai = a[i]
        t[2 * i] += ai * ai
        for j in range(i + 1, LIMBS):
            t[i + j] += 2 * ai * a[j]
    _reduce(t)
    for i in range(LIMBS):
        out[i] = t[i]


@njit(cache=True)
def _mul_small(a, c, t, out):
    for k in range(_WIDE):
        t[k] = 0
    for i in range(LIMBS):
        t[i] = a[i] * c
    _reduce(t)
    for i in range(LIMBS):
        out[i] = t[i]


@njit(cache=True)
def _add(a, b, t, out):
    for k in range(_WIDE):
        t[k] = 0
    for i in range(LIMBS):
        t[i] = a[i] + b[i]
    _reduce(t)
    for i in range(LIMBS):
        out[i] = t[i]


@njit(cache=True)
def _sub(a, b, t, out):
    for k in range(_WIDE):
        t[k] = 0
    for i in range(LIMBS):
        t[i] = a[i] + SUBPAD[i] - b[i]
    _reduce(t)
    for i in range(LIMBS):
        out[i] = t[i]


@njit(cache=True)
def _invert(a, t, tmp, out):
    # Fermat: a^(p-2), square-and-multiply over the fixed public exponent
    for i in range(LIMBS):
        out[i] = 0
        tmp[i] = a[i]
    out[0] = 1
    for idx in range(255):
        _sqr(out, t, out)
        if EXP_P_MINUS_2[idx] == 1:
            _mul(out, tmp, t, out)


@njit(cache=True)
def _freeze(v, w):
    # fold bits >= 255 (2^255 = 19 mod p); run twice to absorb re-carry
    for _ in range(2):
        high = v[LIMBS - 1] >> TOP_SHIFT
        v[LIMBS - 1] &= (1 << TOP_SHIFT) - 1
        v[0] += 19 * high
        c = np.int64(0)
        for i in range(LIMBS):
            x = v[i] + c
            v[i] = x & MASK
            c = x >> RADIX
        v[0] += FOLD * c
    borrow = np.int64(0)
    for i in range(LIMBS):
        x = v[i] - P_LIMBS[i] - borrow
        w[i] = x & MASK
        borrow = (x >> RADIX) & 1
    use_sub = -(1 - borrow)  # all-ones when v >= p
    for i in range(LIMBS):
        v[i] = v[i] ^ ((v[i] ^ w[i]) & use_sub)


@njit(cache=True)
def _cswap(mask, a, b):
    for i in range(LIMBS):
        x = mask & (a[i] ^ b[i])
        a[i] ^= x
        b[i] ^= x


@njit(cache=True)
def _decode(ub, out):
    # little-endian bits 0..254; bit 255 ignored by construction
    for i in range(LIMBS):
        acc = np.int64(0)
        for j in range(RADIX):
            pos = RADIX * i + j
            if pos < 255:
                bit = np.int64((ub[pos >> 3] >> (pos & 7)) & 1)
                acc |= bit << j
        out[i] = acc


@njit(cache=True)
def _encode(v, out):
    for i in range(32):
        out[i] = 0
    for i in range(LIMBS):
        x = v[i]
        for j in range(RADIX):
            pos = RADIX * i + j
            if pos < 255:
                out[pos >> 3] |= np.uint8(((x >> j) & 1) << (pos & 7))


@njit(cache=True)
def _ladder_one(kb, ub, ob):
    x1 = np.empty(LIMBS, np.int64)
    _decode(ub, x1)
    x2 = np.zeros(LIMBS, np.int64)
    x2[0] = 1
    z2 = np.zeros(LIMBS, np.int64)
    x3 = x1.copy()
    z3 = np.zeros(LIMBS, np.int64)
    z3[0] = 1

    t = np.empty(_WIDE, np.int64)
    a = np.empty(LIMBS, np.int64)
    aa = np.empty(LIMBS, np.int64)
    b = np.empty(LIMBS, np.int64)
    bb = np.empty(LIMBS, np.int64)
    e = np.empty(LIMBS, np.int64)
    c = np.empty(LIMBS, np.int64)
    d = np.empty(LIMBS, np.int64)
    da = np.empty(LIMBS, np.int64)
    cb = np.empty(LIMBS, np.int64)
    s = np.empty(LIMBS, np.int64)

    swap = np.int64(0)
    for pos in range(254, -1, -1):
        bit = np.int64((kb[pos >> 3] >> (pos & 7)) & 1)
        swap ^= bit
        mask = -swap
        _cswap(mask, x2, x3)
        _cswap(mask, z2, z3)
        swap = bit

        _add(x2, z2, t, a)
        _sqr(a, t, aa)
        _sub(x2, z2, t, b)
        _sqr(b, t, bb)
        _sub(aa, bb, t, e)
        _add(x3, z3, t, c)
        _sub(x3, z3, t, d)
        _mul(d, a, t, da)
        _mul(c, b, t, cb)
        _add(da, cb, t, s)
        _sqr(s, t, x3)
        _sub(da, cb, t, s)
        _sqr(s, t, s)
        _mul(x1, s, t, z3)
        _mul(aa, bb, t, x2)
        _mul_small(e, A24, t, s)
        _add(aa, s, t, s)
        _mul(e, s, t, z2)

    mask = -swap
    _cswap(mask, x2, x3)
    _cswap(mask, z2, z3)

    _invert(z2, t, b, a)
    _mul(x2, a, t, c)
    _freeze(c, d)
    _encode(c, ob)


@njit(cache=True, parallel=True)
def _ladder_many(K, U, OUT):
    for e in prange(K.shape[0]):
        _ladder_one(K[e], U[e], OUT[e])


def ladder_batch(k: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Batched x-only scalar multiplication; (B, 32) uint8 throughout."""
    k = np.ascontiguousarray(k, dtype=np.uint8)
    u = np.ascontiguousarray(u, dtype=np.uint8)
    out = np.empty_like(u)
    _ladder_many(k, u, out)
    return out


# batch-shaped wrappers so tests can drive either backend uniformly

def _batch_op(op, *arrays):
    batch = arrays[0].shape[0]
    t = np.empty(_WIDE, np.int64)
    out = np.empty((batch, LIMBS), np.int64)
    for i in range(batch):
        op(*(arr[i] for arr in arrays), t, out[i])
    return out


def mul(a, b):
    return _batch_op(_mul, a, b)


def add(a, b):
    return _batch_op(_add, a, b)


def sub(a, b):
    return _batch_op(_sub, a, b)


def mul_small(a, c):
    t = np.empty(_WIDE, np.int64)
    out = np.empty_like(a)
    for i in range(a.shape[0]):
        _mul_small(a[i], np.int64(c), t, out[i])
    return out


def invert(a):
    t = np.empty(_WIDE, np.int64)
    tmp = np.empty(LIMBS, np.int64)
    out = np.empty_like(a)
    for i in range(a.shape[0]):
        _invert(a[i], t, tmp, out[i])
    return out


def freeze(a):
    v = a.copy()
    w = np.empty(LIMBS, np.int64)
    for i in range(v.shape[0]):
        _freeze(v[i], w)
    return v
