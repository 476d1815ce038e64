"""ASCII armor: base64 text transport with a CRC24 trailer.

Standard OpenPGP armor constants: CRC24 init 0xB704CE, generator
0x864CFA, 64-column base64 body, checksum line prefixed with '='.
"""

from __future__ import annotations

import base64
import binascii

from .errors import BadFraming, ChecksumMismatch

LABEL_MESSAGE = "PGP MESSAGE"
LABEL_PUBLIC_KEY = "PGP PUBLIC KEY BLOCK"
LABEL_SECRET_KEY = "PGP PRIVATE KEY BLOCK"

_LINE_WIDTH = 64

_CRC24_INIT = 0xB704CE
_CRC24_POLY = 0x864CFB


def _build_table() -> list[int]:
    table = []
    for octet in range(256):
        crc = octet << 16
        for _ in range(8):
            crc <<= 1
            if crc & 0x1000000:
                crc ^= _CRC24_POLY | 0x1000000
        table.append(crc & 0xFFFFFF)
    return table


_CRC24_TABLE = _build_table()


def crc24(data: bytes) -> int:
    crc = _CRC24_INIT
    for octet in data:
        crc = ((crc << 8) & 0xFFFFFF) ^ _CRC24_TABLE[((crc >> 16) ^ octet) & 0xFF]
    return crc


def armor(data: bytes, label: str) -> str:
    body = base64.b64encode(data).decode("ascii")
    lines = [f"-----BEGIN {label}-----", ""]
    lines.extend(body[i : i + _LINE_WIDTH] for i in range(0, len(body), _LINE_WIDTH))
    checksum = base64.b64encode(crc24(data).to_bytes(3, "big")).decode("ascii")
    lines.append("=" + checksum)
    lines.append(f"-----END {label}-----")
    return "\n".join(lines) + "\n"


def dearmor(text: str, expected_label: str | None = None) -> tuple[bytes, str]:
    """Returns (payload, label); verifies structure and checksum."""
    lines = [line.rstrip("\r") for line in text.splitlines()]
    begin = end = None
    label = ""
    for i, line in enumerate(lines):
        if line.startswith("-----BEGIN ") and line.endswith("-----"):
            begin = i
            label = line[len("-----BEGIN ") : -5]
            break
    if begin is None:
        raise BadFraming("no BEGIN line")
    for i in range(begin + 1, len(lines)):
        if lines[i] == f"-----END {label}-----":
            end = i
            break
    if end is None:
        raise BadFraming("no matching END line")
    if expected_label is not None and label != expected_label:
        raise BadFraming(f"expected {expected_label!r}, found {label!r}")

    body: list[str] = []
    checksum_line = None
    for line in lines[begin + 1 : end]:
        stripped = line.strip()
        if not stripped:
            continue
        if ":" in stripped and not body and checksum_line is None:
            continue  # armor header line
        if stripped.startswith("="):
            if checksum_line is not None:
                raise BadFraming("multiple checksum lines")
            checksum_line = stripped
            continue
        if checksum_line is not None:
            raise BadFraming("data after checksum line")
        body.append(stripped)

    try:
        payload = base64.b64decode("".join(body).encode("ascii"), validate=True)
    except (binascii.Error, ValueError) as exc:
        raise BadFraming(f"invalid base64 body: {exc}") from None
    if checksum_line is None:
        raise BadFraming("missing checksum line")
    try:
        declared = base64.b64decode(checksum_line[1:].encode("ascii"), validate=True)
    except (binascii.Error, ValueError):
        raise BadFraming("invalid checksum encoding") from None
    if len(declared) != 3:
        raise BadFraming("checksum must decode to 3 octets")
    if int.from_bytes(declared, "big") != crc24(payload):
        raise ChecksumMismatch("armor checksum does not match payload")
    return payload, label
