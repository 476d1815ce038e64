"""Arithmetic modulo the prime order of the curve's large subgroup.

Holds every named secret of the protocol: long-term decryption scalars,
delegated-decryption scalars, and the proxy factors that divert a key
exchange from one holder to another.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ZeroInverse

#: order of the large subgroup generated by u = 9
N = 2**252 + 27742317777372353535851937790883648493

SCALAR_BYTES = 32


@dataclass(frozen=True)
class Scalar:
    """Field element in [0, N); 32-octet little-endian wire form."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < N:
            raise ValueError("scalar out of range")

    def encode(self) -> bytes:
        return self.value.to_bytes(SCALAR_BYTES, "little")

    def hex(self) -> str:
        return self.encode().hex()

    @classmethod
    def from_hex(cls, text: str) -> "Scalar":
        if len(text) != 2 * SCALAR_BYTES:
            raise ValueError("scalar hex form must be 64 characters")
        return scalar_from_bytes(bytes.fromhex(text))


def scalar_from_bytes(b: bytes) -> Scalar:
    """Little-endian integer of b, reduced mod N.  Total: never fails."""
    if len(b) != SCALAR_BYTES:
        raise ValueError("scalar encoding must be 32 octets")
    return Scalar(int.from_bytes(b, "little") % N)


def scalar_invert(x: Scalar) -> Scalar:
    """Multiplicative inverse via Fermat exponentiation x^(N-2)."""
    if x.value == 0:
        raise ZeroInverse("zero has no inverse")
    return Scalar(pow(x.value, N - 2, N))


def scalar_mul_mod(a: Scalar, b: Scalar) -> Scalar:
    return Scalar(a.value * b.value % N)


@dataclass(frozen=True)
class ClampedSecret:
    """Secret scalar drawn from 2^254 + 8*{0, ..., 2^251 - 1}.

    ``raw`` feeds curve scalar multiplication unchanged; ``as_scalar`` is
    the same integer reduced mod N for field arithmetic.  The two roles are
    deliberately separate types of access.
    """

    raw: bytes
    as_scalar: Scalar = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.raw) != SCALAR_BYTES:
            raise ValueError("clamped secret must be 32 octets")
        v = int.from_bytes(self.raw, "little")
        if v & 7 or not v >> 254 == 1:
            raise ValueError("bytes do not satisfy the clamped form")
        object.__setattr__(self, "as_scalar", Scalar(v % N))


def clamp(b: bytes) -> ClampedSecret:
    """Clear bits 0-2 and 255, set bit 254."""
    if len(b) != SCALAR_BYTES:
        raise ValueError("clamp input must be 32 octets")
    v = bytearray(b)
    v[0] &= 248
    v[31] &= 127
    v[31] |= 64
    return ClampedSecret(bytes(v))


@dataclass(frozen=True)
class ProxyFactor:
    """Quotient of two secrets, d_source / d_dest mod N; held by the proxy.

    Lives purely in the order-N field and is not clamped: as an integer it
    need not be a multiple of the curve cofactor, which is exactly why the
    proxy must reject small-subgroup points before multiplying.
    """

    value: Scalar

    def __post_init__(self) -> None:
        if self.value.value == 0:
            raise ValueError("proxy factor must be nonzero")

    def encode(self) -> bytes:
        return self.value.encode()

    @classmethod
    def from_bytes(cls, b: bytes) -> "ProxyFactor":
        return cls(scalar_from_bytes(b))


def derive_proxy_factor(d_source: ClampedSecret, d_dest: ClampedSecret) -> ProxyFactor:
    """d_source * d_dest^-1 mod N, so that d_dest * k recovers d_source."""
    k = scalar_mul_mod(d_source.as_scalar, scalar_invert(d_dest.as_scalar))
    return ProxyFactor(k)
