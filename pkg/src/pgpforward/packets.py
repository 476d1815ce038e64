"""Binary packet codec: key-exchange packets, KDF parameter fields, key
material, and the proxy-side packet rewrite.

Layouts are frozen in docs/wire-format.md; the golden fixtures under
tests/fixtures are normative.  Framing follows the one/two/five-octet
definite-length scheme; partial lengths are out of scope.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from .curve import CurvePoint
from .errors import (
    MalformedPacket,
    MissingFingerprint,
    ReservedSize,
    UnknownVersion,
    UnsupportedAlgorithm,
)
from .scalars import ClampedSecret

#: Curve25519 OID (1.3.6.1.4.1.3029.1.5.1)
CURVE_OID = bytes.fromhex("2b060104019755010501")

ALG_ECDH = 0x12

TAG_PKESK = 1
TAG_SECRET_KEY = 5
TAG_PUBLIC_KEY = 6
TAG_SEALED_PAYLOAD = 61  # experimental-range tag for the AEAD envelope

PKESK_VERSION = 3
KEY_PACKET_VERSION = 1

FINGERPRINT_BYTES = 20
KEY_ID_BYTES = 8

#: MPI bit count of a native-form point: 0x40 prefix (7 bits) + 32 octets
_POINT_MPI_BITS = 263


# --- packet framing ---

def write_packet(tag: int, body: bytes) -> bytes:
    header = bytes([0xC0 | tag])
    n = len(body)
    if n < 192:
        return header + bytes([n]) + body
    if n < 8384:
        n -= 192
        return header + bytes([192 + (n >> 8), n & 0xFF]) + body
    return header + b"\xff" + n.to_bytes(4, "big") + body


def read_packet(data: bytes, offset: int = 0) -> tuple[int, bytes, int]:
    """Returns (tag, body, offset past the packet)."""
    if offset >= len(data):
        raise MalformedPacket("truncated: no packet header")
    first = data[offset]
    if first & 0xC0 != 0xC0:
        raise MalformedPacket("not a new-format packet header")
    tag = first & 0x3F
    offset += 1
    if offset >= len(data):
        raise MalformedPacket("truncated: no length octet")
    l0 = data[offset]
    offset += 1
    if l0 < 192:
        length = l0
    elif l0 < 224:
        if offset >= len(data):
            raise MalformedPacket("truncated: two-octet length")
        length = ((l0 - 192) << 8) + data[offset] + 192
        offset += 1
    elif l0 == 255:
        if offset + 4 > len(data):
            raise MalformedPacket("truncated: five-octet length")
        length = int.from_bytes(data[offset : offset + 4], "big")
        offset += 4
    else:
        raise MalformedPacket("partial packet lengths are not supported")
    if offset + length > len(data):
        raise MalformedPacket("truncated: body shorter than declared length")
    return tag, data[offset : offset + length], offset + length


def iter_packets(data: bytes) -> list[tuple[int, bytes, bytes]]:
    """All packets in sequence as (tag, body, raw including framing)."""
    out = []
    offset = 0
    while offset < len(data):
        start = offset
        tag, body, offset = read_packet(data, offset)
        out.append((tag, body, data[start:offset]))
    return out


# --- KDF parameter field ---

@dataclass(frozen=True)
class KdfParams:
    """Hash/wrap algorithm selector; version 2 adds a forwarding flag and a
    replacement fingerprint for the KDF."""

    version: int
    hash_id: int
    sym_id: int
    flags: int = 0
    fingerprint: bytes | None = None

    def __post_init__(self) -> None:
        if self.version == 1:
            if self.flags or self.fingerprint is not None:
                raise ValueError("version 1 carries no flags or fingerprint")
        elif self.version == 2:
            if bool(self.flags & 0x01) != (self.fingerprint is not None):
                raise ValueError("flag 0x01 and fingerprint must agree")
            if self.fingerprint is not None and len(self.fingerprint) != FINGERPRINT_BYTES:
                raise ValueError("replacement fingerprint must be 20 octets")
        else:
            raise ValueError("version must be 1 or 2")

    @property
    def has_replacement_fingerprint(self) -> bool:
        return self.version == 2 and bool(self.flags & 0x01)


def serialize_kdf_params(params: KdfParams) -> bytes:
    if params.version == 1:
        fields = bytes([1, params.hash_id, params.sym_id])
    else:
        fields = bytes([2, params.hash_id, params.sym_id, params.flags])
        if params.has_replacement_fingerprint:
            fields += params.fingerprint
    size = len(fields)
    if size in (0, 0xFF):
        raise ReservedSize("size octet values 0 and 0xff are reserved")
    return bytes([size]) + fields


def parse_kdf_params(data: bytes, offset: int = 0) -> tuple[KdfParams, int]:
    if offset >= len(data):
        raise MalformedPacket("truncated: no KDF size octet")
    size = data[offset]
    if size in (0, 0xFF):
        raise ReservedSize("size octet values 0 and 0xff are reserved")
    offset += 1
    fields = data[offset : offset + size]
    if len(fields) != size:
        raise MalformedPacket("truncated KDF parameter field")
    version = fields[0]
    if version == 1:
        if size != 3:
            raise MalformedPacket("version 1 KDF field must span 3 octets")
        return KdfParams(1, fields[1], fields[2]), offset + size
    if version == 2:
        if size < 4:
            raise MalformedPacket("version 2 KDF field must span at least 4 octets")
        flags = fields[3]
        fingerprint = None
        if flags & 0x01:
            if size < 4 + FINGERPRINT_BYTES:
                raise MissingFingerprint("flag 0x01 set but fingerprint missing")
            if size != 4 + FINGERPRINT_BYTES:
                raise MalformedPacket("unexpected octets after fingerprint")
            fingerprint = fields[4:24]
        elif size != 4:
            raise MalformedPacket("unexpected octets in version 2 KDF field")
        return KdfParams(2, fields[1], fields[2], flags, fingerprint), offset + size
    raise UnknownVersion(f"KDF parameter version {version:#04x}")


# --- point MPI ---

def write_point_mpi(point: CurvePoint) -> bytes:
    return _POINT_MPI_BITS.to_bytes(2, "big") + b"\x40" + point.data


def read_point_mpi(data: bytes, offset: int) -> tuple[CurvePoint, int]:
    if offset + 2 > len(data):
        raise MalformedPacket("truncated MPI length")
    bits = int.from_bytes(data[offset : offset + 2], "big")
    offset += 2
    if bits != _POINT_MPI_BITS:
        raise MalformedPacket("point MPI must declare 263 bits")
    if offset + 33 > len(data):
        raise MalformedPacket("truncated point MPI")
    if data[offset] != 0x40:
        raise MalformedPacket("point MPI must use the native 0x40 form")
    point = CurvePoint.from_bytes(data[offset + 1 : offset + 33])
    return point, offset + 33


# --- key-exchange packet ---

@dataclass(frozen=True)
class Pkesk:
    """Key-exchange packet: which key, which exchange share, and the
    wrapped session key."""

    recipient_key_id: bytes
    curve_oid: bytes
    ephemeral: CurvePoint
    wrapped_session_key: bytes
    version: int = PKESK_VERSION
    pk_algorithm: int = ALG_ECDH

    def __post_init__(self) -> None:
        if len(self.recipient_key_id) != KEY_ID_BYTES:
            raise ValueError("key id must be 8 octets")
        if not 0 < len(self.curve_oid) < 0xFF:
            raise ValueError("curve OID length out of range")
        if not 0 < len(self.wrapped_session_key) < 0x100:
            raise ValueError("wrapped session key length out of range")


def serialize_pkesk(p: Pkesk) -> bytes:
    body = (
        bytes([p.version])
        + p.recipient_key_id
        + bytes([p.pk_algorithm, len(p.curve_oid)])
        + p.curve_oid
        + write_point_mpi(p.ephemeral)
        + bytes([len(p.wrapped_session_key)])
        + p.wrapped_session_key
    )
    return write_packet(TAG_PKESK, body)


def parse_pkesk(data: bytes) -> Pkesk:
    tag, body, end = read_packet(data)
    if tag != TAG_PKESK:
        raise MalformedPacket(f"expected key-exchange packet, got tag {tag}")
    if end != len(data):
        raise MalformedPacket("trailing octets after packet")
    return parse_pkesk_body(body)


def parse_pkesk_body(body: bytes) -> Pkesk:
    if len(body) < 11:
        raise MalformedPacket("key-exchange packet body too short")
    version = body[0]
    if version != PKESK_VERSION:
        raise MalformedPacket(f"unsupported packet version {version}")
    key_id = body[1:9]
    algorithm = body[9]
    if algorithm != ALG_ECDH:
        raise UnsupportedAlgorithm(f"public-key algorithm {algorithm:#04x}")
    oid_len = body[10]
    offset = 11
    if oid_len == 0 or offset + oid_len > len(body):
        raise MalformedPacket("bad curve OID length")
    oid = body[offset : offset + oid_len]
    offset += oid_len
    ephemeral, offset = read_point_mpi(body, offset)
    if offset >= len(body):
        raise MalformedPacket("truncated: no wrapped-key length")
    wrap_len = body[offset]
    offset += 1
    wrapped = body[offset : offset + wrap_len]
    if len(wrapped) != wrap_len or wrap_len == 0:
        raise MalformedPacket("truncated wrapped session key")
    offset += wrap_len
    if offset != len(body):
        raise MalformedPacket("trailing octets in packet body")
    return Pkesk(key_id, oid, ephemeral, wrapped)


def rewrite_pkesk(p: Pkesk, new_ephemeral: CurvePoint, new_key_id: bytes) -> Pkesk:
    """The proxy's rewrite: replace the exchange share and the recipient
    key id, preserving every other octet."""
    if len(new_key_id) != KEY_ID_BYTES:
        raise ValueError("key id must be 8 octets")
    return replace(p, recipient_key_id=new_key_id, ephemeral=new_ephemeral)


# --- key material ---

@dataclass(frozen=True)
class PublicKeyMaterial:
    public: CurvePoint
    kdf: KdfParams
    curve_oid: bytes = CURVE_OID
    signing_stub: bytes = b""  # opaque carriage only; no signature algorithms

    @property
    def fingerprint(self) -> bytes:
        return key_fingerprint(self.public, self.curve_oid)

    @property
    def key_id(self) -> bytes:
        return self.fingerprint[-KEY_ID_BYTES:]


@dataclass(frozen=True)
class SecretKeyMaterial:
    material: PublicKeyMaterial
    secret: ClampedSecret


def key_fingerprint(public: CurvePoint, curve_oid: bytes = CURVE_OID) -> bytes:
    """20-octet digest over the canonical public core (version, OID,
    point).  KDF parameters are excluded so embedding a replacement
    fingerprint does not change the key's identity."""
    core = bytes([KEY_PACKET_VERSION, len(curve_oid)]) + curve_oid + b"\x40" + public.data
    return hashlib.sha1(b"\x99" + len(core).to_bytes(2, "big") + core).digest()


def _key_body(mat: PublicKeyMaterial) -> bytes:
    return (
        bytes([KEY_PACKET_VERSION, len(mat.curve_oid)])
        + mat.curve_oid
        + write_point_mpi(mat.public)
        + serialize_kdf_params(mat.kdf)
        + len(mat.signing_stub).to_bytes(2, "big")
        + mat.signing_stub
    )


def serialize_public_key(mat: PublicKeyMaterial) -> bytes:
    return write_packet(TAG_PUBLIC_KEY, _key_body(mat))


def serialize_secret_key(key: SecretKeyMaterial) -> bytes:
    return write_packet(TAG_SECRET_KEY, _key_body(key.material) + key.secret.raw)


def _parse_key_body(body: bytes) -> tuple[PublicKeyMaterial, int]:
    if len(body) < 2:
        raise MalformedPacket("key packet body too short")
    if body[0] != KEY_PACKET_VERSION:
        raise MalformedPacket(f"unsupported key packet version {body[0]}")
    oid_len = body[1]
    offset = 2
    if oid_len == 0 or offset + oid_len > len(body):
        raise MalformedPacket("bad curve OID length")
    oid = body[offset : offset + oid_len]
    offset += oid_len
    point, offset = read_point_mpi(body, offset)
    kdf, offset = parse_kdf_params(body, offset)
    if offset + 2 > len(body):
        raise MalformedPacket("truncated signing stub length")
    stub_len = int.from_bytes(body[offset : offset + 2], "big")
    offset += 2
    stub = body[offset : offset + stub_len]
    if len(stub) != stub_len:
        raise MalformedPacket("truncated signing stub")
    offset += stub_len
    return PublicKeyMaterial(point, kdf, oid, stub), offset


def parse_public_key(data: bytes) -> PublicKeyMaterial:
    tag, body, end = read_packet(data)
    if tag != TAG_PUBLIC_KEY:
        raise MalformedPacket(f"expected public key packet, got tag {tag}")
    if end != len(data):
        raise MalformedPacket("trailing octets after packet")
    mat, offset = _parse_key_body(body)
    if offset != len(body):
        raise MalformedPacket("trailing octets in key packet body")
    return mat


def parse_secret_key(data: bytes) -> SecretKeyMaterial:
    tag, body, end = read_packet(data)
    if tag != TAG_SECRET_KEY:
        raise MalformedPacket(f"expected secret key packet, got tag {tag}")
    if end != len(data):
        raise MalformedPacket("trailing octets after packet")
    mat, offset = _parse_key_body(body)
    raw = body[offset : offset + 32]
    if len(raw) != 32 or offset + 32 != len(body):
        raise MalformedPacket("secret scalar must be exactly 32 octets")
    try:
        secret = ClampedSecret(raw)
    except ValueError as exc:
        raise MalformedPacket(str(exc)) from None
    return SecretKeyMaterial(mat, secret)
