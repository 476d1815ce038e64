"""Core forwarding protocol, independent of packet encodings.

One party encrypts to a long-term key with a deferred key exchange; the
key holder can delegate decryption by generating a fresh key pair for the
delegate plus a proxy factor for a semi-trusted intermediary, which then
diverts each incoming exchange share without learning anything it can
decrypt with.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import packets
from .curve import CurvePoint, base_mul, is_in_large_subgroup, is_low_order, scalar_mul
from .errors import (
    DegenerateSecret,
    InvalidRecipientKey,
    NotInLargeSubgroup,
    SmallSubgroupRejection,
)
from .rand import ByteSource
from .scalars import ClampedSecret, ProxyFactor, clamp, derive_proxy_factor

FINGERPRINT_BYTES = 20
KEY_ID_BYTES = 8


@dataclass(frozen=True)
class KeyPair:
    secret: ClampedSecret
    public: CurvePoint
    fingerprint: bytes

    def __post_init__(self) -> None:
        if len(self.fingerprint) != FINGERPRINT_BYTES:
            raise ValueError("fingerprint must be 20 octets")

    @property
    def key_id(self) -> bytes:
        return self.fingerprint[-KEY_ID_BYTES:]


@dataclass(frozen=True)
class Encapsulation:
    """Sender side of a deferred exchange: public share plus the shared
    point the sender derived with it.  The ephemeral secret itself is
    dropped before this object is returned."""

    ephemeral: CurvePoint
    shared_secret: CurvePoint


@dataclass(frozen=True)
class ForwardingGrant:
    """Everything one delegation produces: the delegate's fresh key pair,
    the proxy's factor, and the fingerprint the delegate must feed the KDF
    (the source's effective one, so chained grants keep the original)."""

    new_keypair: KeyPair
    proxy_factor: ProxyFactor
    source_fingerprint: bytes


def generate_keypair(rng: ByteSource) -> KeyPair:
    secret = clamp(rng(32))
    public = base_mul(secret)
    return KeyPair(secret, public, packets.key_fingerprint(public))


def sender_encapsulate(recipient_public: CurvePoint, rng: ByteSource) -> Encapsulation:
    """Fresh deferred exchange against a validated recipient key."""
    if not is_in_large_subgroup(recipient_public):
        raise InvalidRecipientKey("recipient key failed the subgroup test")
    ephemeral_secret = clamp(rng(32))
    share = base_mul(ephemeral_secret)
    shared = scalar_mul(ephemeral_secret, recipient_public)
    if shared.is_identity:
        raise DegenerateSecret("key agreement produced the all-zero point")
    return Encapsulation(share, shared)


def receiver_decapsulate(secret: ClampedSecret, ephemeral: CurvePoint) -> CurvePoint:
    shared = scalar_mul(secret, ephemeral)
    if shared.is_identity:
        raise DegenerateSecret("key agreement produced the all-zero point")
    return shared


def setup_forwarding(
    source_secret: ClampedSecret,
    source_fingerprint: bytes,
    rng: ByteSource,
) -> ForwardingGrant:
    """Issue one delegation from the holder of ``source_secret``.

    Callers must use a fresh grant per delegate (the factor and the
    delegate secret are multiplicative shares of the source secret, so
    reuse links delegates).  For a source key that is itself a delegate,
    pass the fingerprint its own KDF override names, so the original
    recipient's fingerprint survives chaining.
    """
    if len(source_fingerprint) != FINGERPRINT_BYTES:
        raise ValueError("source fingerprint must be 20 octets")
    keypair = generate_keypair(rng)
    factor = derive_proxy_factor(source_secret, keypair.secret)
    return ForwardingGrant(keypair, factor, source_fingerprint)


def proxy_transform(factor: ProxyFactor, ephemeral: CurvePoint) -> CurvePoint:
    """Divert one exchange share: k * P, only for validated P.

    Rejection is mandatory, not advisory: multiplying a small-subgroup
    point by the unclamped factor would leak factor residues.
    """
    if is_low_order(ephemeral):
        raise SmallSubgroupRejection("ephemeral share has order dividing 8")
    if not is_in_large_subgroup(ephemeral):
        raise NotInLargeSubgroup("ephemeral share outside the prime-order subgroup")
    return scalar_mul(factor.value, ephemeral)


def forwarded_decapsulate(
    forwardee_secret: ClampedSecret, transformed: CurvePoint
) -> CurvePoint:
    """Delegate side: d_i * P_i equals the sender's shared point whenever
    the chain followed the protocol."""
    shared = scalar_mul(forwardee_secret, transformed)
    if shared.is_identity:
        raise DegenerateSecret("key agreement produced the all-zero point")
    return shared
