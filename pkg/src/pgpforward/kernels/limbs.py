"""Shared limb representation for GF(2^255 - 19) kernels.

Field elements are vectors of ``LIMBS`` signed 64-bit limbs in radix
``2**RADIX``.  With 13 limbs of 20 bits, schoolbook products stay below
2^53 per accumulator slot, so a full multiply plus fold fits comfortably
in int64 without 128-bit intermediates.  Both kernel backends consume
these constants; changing the radix here retunes both.
"""

from __future__ import annotations

import numpy as np

P = 2**255 - 19
A24 = 121665  # (486662 - 2) / 4, Montgomery ladder constant

LIMBS = 13
RADIX = 20
MASK = (1 << RADIX) - 1

# Product limb k >= LIMBS folds into k - LIMBS with this coefficient:
# 2^(LIMBS*RADIX) = FOLD mod p.
FOLD = (1 << (LIMBS * RADIX)) % P
assert FOLD * (1 << 44) < 2**63, "fold coefficient too large for int64 headroom"

# Top limb bits above position 255 (none when LIMBS*RADIX == 255).
TOP_SHIFT = 255 - RADIX * (LIMBS - 1)

# a - b is computed as a + SUBPAD - b where SUBPAD is a redundant
# decomposition of a multiple of p chosen so every limb stays non-negative.
_K = (1 << (LIMBS * RADIX + 1)) % P
SUBPAD = np.array(
    [(1 << (RADIX + 1)) - _K] + [(1 << (RADIX + 1)) - 2] * (LIMBS - 1),
    dtype=np.int64,
)


def int_to_limbs(x: int) -> np.ndarray:
    return np.array([(x >> (RADIX * i)) & MASK for i in range(LIMBS)], dtype=np.int64)


def limbs_to_int(v) -> int:
    return sum(int(v[i]) << (RADIX * i) for i in range(LIMBS))


P_LIMBS = int_to_limbs(P)

# Bits of p - 2, most significant first, for Fermat inversion.
_e = P - 2
EXP_P_MINUS_2 = np.array([(_e >> i) & 1 for i in range(254, -1, -1)], dtype=np.int64)

_BIT_WEIGHTS = (np.int64(1) << np.arange(RADIX, dtype=np.int64))


def bytes_to_limbs(u: np.ndarray) -> np.ndarray:
    """(B, 32) uint8 little-endian -> (B, LIMBS) int64, bit 255 ignored."""
    bits = np.unpackbits(u, axis=1, bitorder="little").astype(np.int64)
    bits[:, 255] = 0
    width = LIMBS * RADIX
    if width > 256:
        bits = np.pad(bits, ((0, 0), (0, width - 256)))
    else:
        bits = bits[:, :width]
    return (bits.reshape(-1, LIMBS, RADIX) * _BIT_WEIGHTS).sum(axis=2)


def limbs_to_bytes(v: np.ndarray) -> np.ndarray:
    """(B, LIMBS) canonical int64 -> (B, 32) uint8 little-endian."""
    bits = ((v[:, :, None] >> np.arange(RADIX)) & 1).astype(np.uint8)
    bits = bits.reshape(v.shape[0], LIMBS * RADIX)
    if bits.shape[1] < 256:
        bits = np.pad(bits, ((0, 0), (0, 256 - bits.shape[1])))
    else:
        bits = bits[:, :256]
    return np.packbits(bits, axis=1, bitorder="little")
