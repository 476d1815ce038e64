"""Message-protection crypto around the shared point.

A one-pass KDF binds the derived wrap key to the exchange context,
including the fingerprint field that forwarding overrides; the session key
travels under an integrity-checked key wrap, and the payload under an AEAD
envelope the proxy never touches.

Fixed suite for this artifact: KDF hash 0x08 (SHA-256), wrap cipher 0x09
(AES-256 key wrap), payload AEAD 0x09 (AES-256-GCM).  The identifiers stay
on the wire so the codec remains general.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.keywrap import (
    InvalidUnwrap,
    aes_key_unwrap,
    aes_key_wrap,
)

from .curve import CurvePoint
from .errors import (
    DegenerateSecret,
    MalformedPacket,
    PayloadAuthFailure,
    UnsupportedAlgorithm,
    UnwrapIntegrityFailure,
)
from .packets import ALG_ECDH, CURVE_OID
from .rand import ByteSource

DEFAULT_HASH_ID = 0x08
DEFAULT_SYM_ID = 0x09

_HASHES = {0x08: hashlib.sha256, 0x09: hashlib.sha384, 0x0A: hashlib.sha512}
#: wrap-cipher key sizes (AES-128/192/256 key wrap)
_WRAP_KEY_SIZES = {0x07: 16, 0x08: 24, 0x09: 32}
#: payload algorithms: id -> key size (AES-256-GCM only in this suite)
_PAYLOAD_KEY_SIZES = {0x09: 32}

_ENVELOPE_VERSION = 1
_NONCE_BYTES = 12

FINGERPRINT_BYTES = 20


@dataclass(frozen=True)
class SessionKey:
    key: bytes
    algorithm_id: int = 0x09

    def __post_init__(self) -> None:
        size = _PAYLOAD_KEY_SIZES.get(self.algorithm_id)
        if size is None:
            raise UnsupportedAlgorithm(f"payload algorithm {self.algorithm_id:#04x}")
        if len(self.key) != size:
            raise ValueError(f"algorithm {self.algorithm_id:#04x} needs {size}-octet keys")


def new_session_key(rng: ByteSource, algorithm_id: int = 0x09) -> SessionKey:
    size = _PAYLOAD_KEY_SIZES.get(algorithm_id)
    if size is None:
        raise UnsupportedAlgorithm(f"payload algorithm {algorithm_id:#04x}")
    return SessionKey(rng(size), algorithm_id)


@dataclass(frozen=True)
class KdfContext:
    """Everything the KDF binds besides the shared point.  When decrypting
    a forwarded message the fingerprint must be the ORIGINAL recipient's,
    not the delegate's own."""

    curve_oid: bytes = CURVE_OID
    kdf_hash_id: int = DEFAULT_HASH_ID
    kdf_sym_id: int = DEFAULT_SYM_ID
    fingerprint_for_kdf: bytes = b"\x00" * FINGERPRINT_BYTES

    def __post_init__(self) -> None:
        if len(self.fingerprint_for_kdf) != FINGERPRINT_BYTES:
            raise ValueError("KDF fingerprint must be 20 octets")


def derive_kek(shared_point: CurvePoint, ctx: KdfContext) -> bytes:
    """One-pass hash over (counter, u, OID, algorithm ids, fingerprint),
    truncated to the wrap cipher's key length.  Layout frozen in the wire
    doc so fixtures stay bit-exact."""
    if shared_point.is_identity:
        raise DegenerateSecret("refusing to derive from the all-zero point")
    hasher = _HASHES.get(ctx.kdf_hash_id)
    if hasher is None:
        raise UnsupportedAlgorithm(f"KDF hash {ctx.kdf_hash_id:#04x}")
    key_size = _WRAP_KEY_SIZES.get(ctx.kdf_sym_id)
    if key_size is None:
        raise UnsupportedAlgorithm(f"wrap cipher {ctx.kdf_sym_id:#04x}")
    block = (
        b"\x00\x00\x00\x01"
        + shared_point.data
        + bytes([len(ctx.curve_oid)])
        + ctx.curve_oid
        + bytes([ALG_ECDH, 0x03, 0x01, ctx.kdf_hash_id, ctx.kdf_sym_id])
        + ctx.fingerprint_for_kdf
    )
    return hasher(block).digest()[:key_size]


def wrap_session_key(kek: bytes, sk: SessionKey) -> bytes:
    """Integrity-checked wrap of (algorithm id, key), padded to the wrap
    cipher's 8-octet granularity."""
    if len(kek) not in (16, 24, 32):
        raise UnsupportedAlgorithm("wrap key must be 16, 24 or 32 octets")
    block = bytes([sk.algorithm_id]) + sk.key
    pad = 8 - len(block) % 8 or 8
    block += bytes([pad]) * pad
    return aes_key_wrap(kek, block)


def unwrap_session_key(kek: bytes, wrapped: bytes) -> SessionKey:
    if len(kek) not in (16, 24, 32):
        raise UnsupportedAlgorithm("wrap key must be 16, 24 or 32 octets")
    try:
        block = aes_key_unwrap(kek, wrapped)
    except (InvalidUnwrap, ValueError) as exc:
        raise UnwrapIntegrityFailure(f"session key unwrap failed: {exc}") from None
    pad = block[-1]
    if not 1 <= pad <= 8 or block[-pad:] != bytes([pad]) * pad:
        raise UnwrapIntegrityFailure("bad padding after unwrap")
    body = block[:-pad]
    if not body:
        raise UnwrapIntegrityFailure("empty session key block")
    try:
        return SessionKey(body[1:], body[0])
    except (UnsupportedAlgorithm, ValueError) as exc:
        raise UnwrapIntegrityFailure(f"implausible session key: {exc}") from None


def seal_payload(sk: SessionKey, plaintext: bytes, rng: ByteSource) -> bytes:
    """AEAD envelope: version, algorithm id, nonce, ciphertext+tag.  The
    proxy forwards this byte-identically; only the key packet changes."""
    nonce = rng(_NONCE_BYTES)
    header = bytes([_ENVELOPE_VERSION, sk.algorithm_id])
    return header + nonce + AESGCM(sk.key).encrypt(nonce, plaintext, header)


def open_payload(sk: SessionKey, sealed: bytes) -> bytes:
    if len(sealed) < 2 + _NONCE_BYTES + 16:
        raise MalformedPacket("sealed payload too short")
    if sealed[0] != _ENVELOPE_VERSION:
        raise MalformedPacket(f"unsupported envelope version {sealed[0]}")
    header = sealed[:2]
    nonce = sealed[2 : 2 + _NONCE_BYTES]
    ciphertext = sealed[2 + _NONCE_BYTES :]
    if sealed[1] != sk.algorithm_id:
        raise PayloadAuthFailure("envelope algorithm does not match session key")
    try:
        return AESGCM(sk.key).decrypt(nonce, ciphertext, header)
    except InvalidTag:
        raise PayloadAuthFailure("payload failed authentication") from None
