"""Pure-numpy kernel backend.

Operates on whole batches at once: every field operation is vectorized
across the batch axis, so a batch of ladders costs a fixed ~2800 vector
multiplies regardless of batch size.  Slow for single points, adequate for
the bulk sampling the security harness does, and a full-fidelity fallback
when the numba backend is unavailable or disabled.
"""

from __future__ import annotations

import numpy as np

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
    bytes_to_limbs,
    limbs_to_bytes,
)

name = "numpy"


def _reduce(t: np.ndarray) -> np.ndarray:
    """(B, 2*LIMBS-1) loose accumulators -> (B, LIMBS) canonical limbs."""
    t[:, 0 : LIMBS - 1] += FOLD * t[:, LIMBS : 2 * LIMBS - 1]
    out = t[:, :LIMBS]
    # limb 0 may end slightly above the radix, which every op tolerates
    for _ in range(2):
        c = np.zeros(t.shape[0], dtype=np.int64)
        for i in range(LIMBS):
            v = out[:, i] + c
            out[:, i] = v & MASK
            c = v >> RADIX
        out[:, 0] += FOLD * c
    return out.copy()


def _wide(a: np.ndarray) -> np.ndarray:
    t = np.zeros((a.shape[0], 2 * LIMBS - 1), dtype=np.int64)
    t[:, :LIMBS] = a
    return t


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    t = np.zeros((a.shape[0], 2 * LIMBS - 1), dtype=np.int64)
    for i in range(LIMBS):
        t[:, i : i + LIMBS] += a[:, i : i + 1] * b
    return _reduce(t)


def mul_small(a: np.ndarray, c: int) -> np.ndarray:
    return _reduce(_wide(a * np.int64(c)))


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _reduce(_wide(a + b))


def sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _reduce(_wide(a + SUBPAD - b))


def invert(a: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(a)
    acc[:, 0] = 1
    for bit in EXP_P_MINUS_2:
        acc = mul(acc, acc)
        if bit:
            acc = mul(acc, a)
    return acc


def freeze(a: np.ndarray) -> np.ndarray:
    """Canonical representative mod p; result limbs encode a value < p."""
    v = a.copy()
    # fold bits at and above position 255 (2^255 = 19 mod p), twice to
    # absorb the carry the first fold may reintroduce
    for _ in range(2):
        high = v[:, LIMBS - 1] >> TOP_SHIFT
        v[:, LIMBS - 1] &= (1 << TOP_SHIFT) - 1
        v[:, 0] += 19 * high
        c = np.zeros(v.shape[0], dtype=np.int64)
        for i in range(LIMBS):
            w = v[:, i] + c
            v[:, i] = w & MASK
            c = w >> RADIX
        v[:, 0] += 19 * (c << (RADIX * LIMBS - 255))
    # single conditional subtraction: values here are < 2^255 = p + 19
    d = np.empty_like(v)
    borrow = np.zeros(v.shape[0], dtype=np.int64)
    for i in range(LIMBS):
        w = v[:, i] - P_LIMBS[i] - borrow
        d[:, i] = w & MASK
        borrow = (w >> RADIX) & 1
    keep = (borrow != 0)[:, None]
    return np.where(keep, v, d)


def _cswap(mask: np.ndarray, a: np.ndarray, b: np.ndarray) -> None:
    x = mask[:, None] & (a ^ b)
    a ^= x
    b ^= x


def ladder_batch(k: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Batched x-only scalar multiplication.

    k, u: (B, 32) uint8 little-endian; bit 255 of u is masked on decode.
    Fixed 255-iteration Montgomery ladder with arithmetic conditional
    swaps; the operation sequence does not depend on scalar bits.
    """
    k = np.ascontiguousarray(k, dtype=np.uint8)
    kbits = np.unpackbits(k, axis=1, bitorder="little").astype(np.int64)
    x1 = bytes_to_limbs(np.ascontiguousarray(u, dtype=np.uint8))
    batch = x1.shape[0]

    x2 = np.zeros_like(x1)
    x2[:, 0] = 1
    z2 = np.zeros_like(x1)
    x3 = x1.copy()
    z3 = np.zeros_like(x1)
    z3[:, 0] = 1

    swap = np.zeros(batch, dtype=np.int64)
    for pos in range(254, -1, -1):
        bit = kbits[:, pos]
        swap ^= bit
        mask = -swap
        _cswap(mask, x2, x3)
        _cswap(mask, z2, z3)
        swap = bit

        a = add(x2, z2)
        aa = mul(a, a)
        b = sub(x2, z2)
        bb = mul(b, b)
        e = sub(aa, bb)
        c = add(x3, z3)
        d = sub(x3, z3)
        da = mul(d, a)
        cb = mul(c, b)
        s = add(da, cb)
        x3 = mul(s, s)
        s = sub(da, cb)
        z3 = mul(x1, mul(s, s))
        x2 = mul(aa, bb)
        z2 = mul(e, add(aa, mul_small(e, A24)))

    mask = -swap
    _cswap(mask, x2, x3)
    _cswap(mask, z2, z3)

    out = freeze(mul(x2, invert(z2)))
    return limbs_to_bytes(out)
