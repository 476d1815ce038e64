"""x-only Curve25519 group operations.

Scalar multiplication runs a fixed-sequence Montgomery ladder (see
``kernels``): 255 iterations with arithmetic conditional swaps, so the
operation trace does not depend on scalar bits.  Validation predicates may
short-circuit; their inputs are public.

The point at infinity cannot be encoded as an affine u-coordinate, so the
all-zero 32-octet ladder output doubles as the identity marker, matching
deployed X25519 behaviour.  Note that the u-coordinate 0 (the order-2
point) also maps to all-zero under any odd multiplier, so points of order
2N share the identity image of order-N points under the exact subgroup
test below; the cofactor check cannot see them either.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels
from .scalars import N, ClampedSecret, Scalar

PRIME = 2**255 - 19
ORDER = N
COFACTOR = 8
BASE_U = 9

POINT_BYTES = 32


@dataclass(frozen=True)
class CurveParams:
    prime: int = PRIME
    order: int = ORDER
    cofactor: int = COFACTOR
    base_u: int = BASE_U


PARAMS = CurveParams()


@dataclass(frozen=True)
class CurvePoint:
    """u-coordinate, 32 octets little-endian, bit 255 always clear."""

    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != POINT_BYTES:
            raise ValueError("point encoding must be 32 octets")
        if self.data[31] & 0x80:
            raise ValueError("bit 255 must be cleared; use from_bytes to decode")

    @classmethod
    def from_bytes(cls, b: bytes) -> "CurvePoint":
        """Decode a wire u-coordinate; masks bit 255, rejects nothing else."""
        if len(b) != POINT_BYTES:
            raise ValueError("point encoding must be 32 octets")
        return cls(bytes(b[:31]) + bytes([b[31] & 0x7F]))

    @classmethod
    def from_u(cls, u: int) -> "CurvePoint":
        return cls((u % 2**255).to_bytes(POINT_BYTES, "little"))

    @property
    def u(self) -> int:
        return int.from_bytes(self.data, "little")

    @property
    def is_identity(self) -> bool:
        return self.data == IDENTITY.data

    def hex(self) -> str:
        return self.data.hex()


IDENTITY = CurvePoint(bytes(POINT_BYTES))
BASE_POINT = CurvePoint.from_u(BASE_U)

_EIGHT = (8).to_bytes(POINT_BYTES, "little")
_ORDER_BYTES = ORDER.to_bytes(POINT_BYTES, "little")

#: per-process instrumentation, read by tests asserting the transform cost
op_counts: Counter = Counter()


def reset_op_counts() -> None:
    op_counts.clear()


def _ladder(k: bytes, u: bytes) -> bytes:
    out = kernels.ladder_batch(
        np.frombuffer(k, dtype=np.uint8).reshape(1, POINT_BYTES),
        np.frombuffer(u, dtype=np.uint8).reshape(1, POINT_BYTES),
    )
    return out.tobytes()


def _scalar_bytes(k: Union[Scalar, ClampedSecret]) -> bytes:
    if isinstance(k, ClampedSecret):
        return k.raw
    if isinstance(k, Scalar):
        return k.encode()
    raise TypeError("scalar multiplier must be Scalar or ClampedSecret")


def scalar_mul(k: Union[Scalar, ClampedSecret], point: CurvePoint) -> CurvePoint:
    """k * P.  Clamped secrets multiply by their raw (unreduced) value;
    plain scalars multiply by their field value with no clamping."""
    op_counts["scalar_mul"] += 1
    return CurvePoint(_ladder(_scalar_bytes(k), point.data))


def base_mul(d: ClampedSecret) -> CurvePoint:
    """d * G where G is the u = 9 generator."""
    op_counts["base_mul"] += 1
    return CurvePoint(_ladder(d.raw, BASE_POINT.data))


def is_low_order(point: CurvePoint) -> bool:
    """True iff 8 * P is the identity: P's order divides the cofactor."""
    op_counts["low_order_check"] += 1
    return _ladder(_EIGHT, point.data) == IDENTITY.data


def is_in_large_subgroup(point: CurvePoint) -> bool:
    """Exact membership test: N * P is the identity and P is not."""
    op_counts["subgroup_check"] += 1
    if point.is_identity:
        return False
    return _ladder(_ORDER_BYTES, point.data) == IDENTITY.data


# --- batch interface (used by the security harness and benchmarks) ---

def scalar_mul_batch(k: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(B, 32) uint8 scalar encodings x (B, 32) u-coordinates -> (B, 32)."""
    op_counts["scalar_mul"] += int(k.shape[0])
    return kernels.ladder_batch(k, u)


def base_mul_batch(d: np.ndarray) -> np.ndarray:
    op_counts["base_mul"] += int(d.shape[0])
    base = np.tile(np.frombuffer(BASE_POINT.data, dtype=np.uint8), (d.shape[0], 1))
    return kernels.ladder_batch(d, base)


def points_from_batch(u: np.ndarray) -> list[CurvePoint]:
    return [CurvePoint(bytes(row)) for row in u]
