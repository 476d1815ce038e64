"""Assembling and opening complete armored messages.

A message is one key-exchange packet followed by one sealed-payload packet
under MESSAGE armor.  Shared by the CLI, the proxy pipeline, and the
security harness.
"""

from __future__ import annotations

from dataclasses import dataclass

from .armor import LABEL_MESSAGE, armor, dearmor
from .errors import KeyIdMismatch, MalformedPacket
from .packets import (
    TAG_PKESK,
    TAG_SEALED_PAYLOAD,
    Pkesk,
    PublicKeyMaterial,
    SecretKeyMaterial,
    parse_pkesk_body,
    read_packet,
    serialize_pkesk,
    write_packet,
)
from .protocol import receiver_decapsulate, sender_encapsulate
from .rand import ByteSource
from .session import (
    KdfContext,
    derive_kek,
    new_session_key,
    open_payload,
    seal_payload,
    unwrap_session_key,
    wrap_session_key,
)


@dataclass(frozen=True)
class ParsedMessage:
    pkesk: Pkesk
    sealed_payload: bytes
    pkesk_raw: bytes
    payload_raw: bytes  # framed payload packet, forwarded verbatim


def effective_kdf_fingerprint(mat: PublicKeyMaterial) -> bytes:
    """Fingerprint the KDF must use with this key: the embedded replacement
    when the key announces forwarding support, otherwise its own."""
    if mat.kdf.has_replacement_fingerprint:
        return mat.kdf.fingerprint
    return mat.fingerprint


def kdf_context_for(mat: PublicKeyMaterial) -> KdfContext:
    return KdfContext(
        curve_oid=mat.curve_oid,
        kdf_hash_id=mat.kdf.hash_id,
        kdf_sym_id=mat.kdf.sym_id,
        fingerprint_for_kdf=effective_kdf_fingerprint(mat),
    )


def build_message(pkesk: Pkesk, sealed_payload: bytes) -> str:
    return armor(
        serialize_pkesk(pkesk) + write_packet(TAG_SEALED_PAYLOAD, sealed_payload),
        LABEL_MESSAGE,
    )


def parse_message_bytes(data: bytes) -> ParsedMessage:
    offset = 0
    tag, body, end = read_packet(data, offset)
    if tag != TAG_PKESK:
        raise MalformedPacket("message must start with a key-exchange packet")
    pkesk = parse_pkesk_body(body)
    pkesk_raw = data[offset:end]
    tag2, sealed, end2 = read_packet(data, end)
    if tag2 != TAG_SEALED_PAYLOAD:
        raise MalformedPacket("second packet must be the sealed payload")
    if end2 != len(data):
        raise MalformedPacket("trailing octets after message packets")
    return ParsedMessage(pkesk, sealed, pkesk_raw, data[end:end2])


def parse_message(armored: str) -> ParsedMessage:
    data, _ = dearmor(armored, LABEL_MESSAGE)
    return parse_message_bytes(data)


def encrypt_message(recipient: PublicKeyMaterial, plaintext: bytes, rng: ByteSource) -> str:
    """Deferred-exchange encryption to one recipient key."""
    enc = sender_encapsulate(recipient.public, rng)
    session_key = new_session_key(rng)
    kek = derive_kek(enc.shared_secret, kdf_context_for(recipient))
    pkesk = Pkesk(
        recipient_key_id=recipient.key_id,
        curve_oid=recipient.curve_oid,
        ephemeral=enc.ephemeral,
        wrapped_session_key=wrap_session_key(kek, session_key),
    )
    return build_message(pkesk, seal_payload(session_key, plaintext, rng))


def decrypt_message(key: SecretKeyMaterial, armored: str) -> bytes:
    """Counterpart of encrypt_message; works unchanged on diverted
    messages because the KDF fingerprint rule reads the key material."""
    parsed = parse_message(armored)
    if parsed.pkesk.recipient_key_id != key.material.key_id:
        raise KeyIdMismatch("message is addressed to a different key")
    shared = receiver_decapsulate(key.secret, parsed.pkesk.ephemeral)
    kek = derive_kek(shared, kdf_context_for(key.material))
    session_key = unwrap_session_key(kek, parsed.pkesk.wrapped_session_key)
    return open_payload(session_key, parsed.sealed_payload)
