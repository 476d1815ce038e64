"""Packet codec: framing, KDF parameter field, key-exchange packets, key
material, fingerprints, and the rewrite contract."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SEEDS, make_recipient
from pgpforward.curve import CurvePoint
from pgpforward.errors import (
    MalformedPacket,
    MissingFingerprint,
    ReservedSize,
    UnknownVersion,
    UnsupportedAlgorithm,
)
from pgpforward.packets import (
    CURVE_OID,
    KdfParams,
    Pkesk,
    PublicKeyMaterial,
    SecretKeyMaterial,
    iter_packets,
    key_fingerprint,
    parse_kdf_params,
    parse_pkesk,
    parse_public_key,
    parse_secret_key,
    read_packet,
    rewrite_pkesk,
    serialize_kdf_params,
    serialize_pkesk,
    serialize_public_key,
    serialize_secret_key,
    write_packet,
)
from pgpforward.rand import drbg
from pgpforward.scalars import clamp

GOLDEN_PKESK = (
    "c169030011223344556677120a2b060104019755010501010740090000000000"
    "0000000000000000000000000000000000000000000000000000300233bfeabb"
    "8ed1993a7dd4c79319a45d11f61a441fd46f85d9dab94b2a0cbf35f6242b1e18"
    "a4a6e5c9b0262e1ed456c3"
)


def _random_pkesk(rng) -> Pkesk:
    return Pkesk(
        recipient_key_id=rng(8),
        curve_oid=CURVE_OID,
        ephemeral=CurvePoint.from_bytes(rng(32)),
        wrapped_session_key=rng(48),
    )


class TestFraming:
    @pytest.mark.parametrize("size", [0, 1, 100, 191, 192, 1000, 8383, 8384, 20000])
    def test_roundtrip_all_length_forms(self, size):
        body = bytes(size)
        tag, parsed, end = read_packet(write_packet(7, body))
        assert tag == 7 and parsed == body and end == len(write_packet(7, body))

    def test_old_format_rejected(self):
        with pytest.raises(MalformedPacket):
            read_packet(b"\x85\x00\x03abc")

    def test_partial_length_rejected(self):
        with pytest.raises(MalformedPacket):
            read_packet(b"\xc1\xe1abc")

    def test_truncated_body(self):
        with pytest.raises(MalformedPacket):
            read_packet(b"\xc1\x10abc")

    def test_iter_packets(self):
        data = write_packet(1, b"a") + write_packet(61, b"bb")
        packets = iter_packets(data)
        assert [(t, b) for t, b, _ in packets] == [(1, b"a"), (61, b"bb")]
        assert b"".join(raw for _, _, raw in packets) == data


class TestKdfParams:
    def test_v1_field_bytes(self):
        """03 01 08 09: size 3, version 1, SHA-256 hash, AES-256 wrap."""
        params, end = parse_kdf_params(bytes.fromhex("03010809"))
        assert params == KdfParams(1, 0x08, 0x09)
        assert end == 4
        assert serialize_kdf_params(params) == bytes.fromhex("03010809")

    def test_v2_field_bytes_with_fingerprint(self):
        """18 02 08 09 01 || fp: size 24, version 2, flags 0x01."""
        fp = bytes(range(20))
        raw = bytes.fromhex("1802080901") + fp
        params, end = parse_kdf_params(raw)
        assert params == KdfParams(2, 0x08, 0x09, 0x01, fp)
        assert params.has_replacement_fingerprint
        assert end == 25
        assert serialize_kdf_params(params) == raw

    def test_v2_without_fingerprint(self):
        raw = bytes.fromhex("0402080900")
        params, _ = parse_kdf_params(raw)
        assert params == KdfParams(2, 0x08, 0x09, 0x00)
        assert not params.has_replacement_fingerprint
        assert serialize_kdf_params(params) == raw

    @pytest.mark.parametrize("size", [0x00, 0xFF])
    def test_reserved_sizes(self, size):
        with pytest.raises(ReservedSize):
            parse_kdf_params(bytes([size]) + bytes(40))

    def test_unknown_version(self):
        with pytest.raises(UnknownVersion):
            parse_kdf_params(bytes.fromhex("03030809"))

    def test_missing_fingerprint(self):
        with pytest.raises(MissingFingerprint):
            parse_kdf_params(bytes.fromhex("0502080901") + b"\xaa")

    def test_v1_wrong_size(self):
        with pytest.raises(MalformedPacket):
            parse_kdf_params(bytes.fromhex("0401080900"))

    def test_truncated_field(self):
        with pytest.raises(MalformedPacket):
            parse_kdf_params(bytes.fromhex("0301"))

    def test_type_invariants(self):
        with pytest.raises(ValueError):
            KdfParams(2, 8, 9, 0x01, None)  # flag without fingerprint
        with pytest.raises(ValueError):
            KdfParams(1, 8, 9, 0x01)  # v1 with flags
        with pytest.raises(ValueError):
            KdfParams(3, 8, 9)


class TestPkesk:
    def test_golden_fixture(self):
        raw = bytes.fromhex(GOLDEN_PKESK)
        p = parse_pkesk(raw)
        assert p.version == 3
        assert p.recipient_key_id == bytes.fromhex("0011223344556677")
        assert p.pk_algorithm == 0x12
        assert p.curve_oid == CURVE_OID
        assert p.ephemeral.u == 9
        assert len(p.wrapped_session_key) == 48
        assert serialize_pkesk(p) == raw

    def test_random_roundtrips(self):
        rng = drbg(SEEDS["codec"])
        for _ in range(50):
            p = _random_pkesk(rng)
            assert parse_pkesk(serialize_pkesk(p)) == p

    def test_truncations_all_rejected(self):
        rng = drbg(SEEDS["codec"] + 1)
        raw = serialize_pkesk(_random_pkesk(rng))
        for cut in range(len(raw)):
            with pytest.raises(MalformedPacket):
                parse_pkesk(raw[:cut])

    def test_non_ecdh_algorithm(self):
        raw = bytearray(bytes.fromhex(GOLDEN_PKESK))
        raw[11] = 0x01  # RSA id in the algorithm octet
        with pytest.raises(UnsupportedAlgorithm):
            parse_pkesk(bytes(raw))

    def test_bad_mpi_prefix(self):
        raw = bytearray(bytes.fromhex(GOLDEN_PKESK))
        raw[25] = 0x41  # native-form marker octet
        with pytest.raises(MalformedPacket):
            parse_pkesk(bytes(raw))

    def test_inconsistent_mpi_bitlength(self):
        raw = bytearray(bytes.fromhex(GOLDEN_PKESK))
        raw[23:25] = (264).to_bytes(2, "big")
        with pytest.raises(MalformedPacket):
            parse_pkesk(bytes(raw))

    def test_trailing_garbage(self):
        raw = bytes.fromhex(GOLDEN_PKESK) + b"\x00"
        with pytest.raises(MalformedPacket):
            parse_pkesk(raw)


class TestRewrite:
    def test_exactly_two_fields_change(self):
        rng = drbg(SEEDS["codec"] + 2)
        p = _random_pkesk(rng)
        new_point = CurvePoint.from_bytes(rng(32))
        new_id = rng(8)
        q = rewrite_pkesk(p, new_point, new_id)
        assert q.ephemeral == new_point and q.recipient_key_id == new_id
        assert q.curve_oid == p.curve_oid
        assert q.wrapped_session_key == p.wrapped_session_key
        assert q.version == p.version and q.pk_algorithm == p.pk_algorithm

    def test_byte_diff_confined_to_replaced_fields(self):
        rng = drbg(SEEDS["codec"] + 3)
        p = _random_pkesk(rng)
        q = rewrite_pkesk(p, CurvePoint.from_bytes(rng(32)), rng(8))
        a, b = serialize_pkesk(p), serialize_pkesk(q)
        assert len(a) == len(b)
        # fields: [0:2] framing, [2:3] version, [3:11] key id, [11:12] alg,
        # [12:13] oid len, [13:23] oid, [23:26] mpi header, [26:58] point,
        # [58:59] wrap len, [59:] wrapped key
        diff = {i for i, (x, y) in enumerate(zip(a, b)) if x != y}
        allowed = set(range(3, 11)) | set(range(26, 58))
        assert diff and diff <= allowed

    def test_identity_rewrite_is_byte_identical(self):
        rng = drbg(SEEDS["codec"] + 4)
        p = _random_pkesk(rng)
        q = rewrite_pkesk(p, p.ephemeral, p.recipient_key_id)
        assert serialize_pkesk(q) == serialize_pkesk(p)


class TestKeyMaterial:
    def test_public_roundtrip(self, rng):
        _, mat, _ = make_recipient(rng)
        assert parse_public_key(serialize_public_key(mat)) == mat

    def test_secret_roundtrip(self, rng):
        _, mat, sec = make_recipient(rng)
        assert parse_secret_key(serialize_secret_key(sec)) == sec

    def test_v2_key_roundtrip(self, rng):
        kp, mat, _ = make_recipient(rng)
        _, mat2, sec2 = make_recipient(rng, version=2, kdf_fingerprint=mat.fingerprint)
        parsed = parse_secret_key(serialize_secret_key(sec2))
        assert parsed.material.kdf.fingerprint == mat.fingerprint

    def test_signing_stub_carried_opaquely(self, rng):
        _, mat, _ = make_recipient(rng)
        stubbed = PublicKeyMaterial(mat.public, mat.kdf, mat.curve_oid, b"\xde\xad\xbe\xef")
        parsed = parse_public_key(serialize_public_key(stubbed))
        assert parsed.signing_stub == b"\xde\xad\xbe\xef"
        assert parsed.fingerprint == mat.fingerprint  # stub outside identity

    def test_secret_scalar_validated(self, rng):
        _, mat, sec = make_recipient(rng)
        raw = bytearray(serialize_secret_key(sec))
        raw[-32] |= 0x07  # break the clamped form (low bits)
        with pytest.raises(MalformedPacket):
            parse_secret_key(bytes(raw))


class TestFingerprint:
    def test_deterministic(self, rng):
        point = CurvePoint.from_bytes(rng(32))
        assert key_fingerprint(point) == key_fingerprint(point)
        assert len(key_fingerprint(point)) == 20

    def test_distinct_keys_distinct_fingerprints(self, rng):
        a = key_fingerprint(CurvePoint.from_bytes(rng(32)))
        b = key_fingerprint(CurvePoint.from_bytes(rng(32)))
        assert a != b

    def test_independent_of_kdf_params(self, rng):
        kp, mat, _ = make_recipient(rng)
        v2 = PublicKeyMaterial(mat.public, KdfParams(2, 8, 9, 1, bytes(20)))
        assert v2.fingerprint == mat.fingerprint

    def test_key_id_is_trailing_octets(self, rng):
        _, mat, _ = make_recipient(rng)
        assert mat.key_id == mat.fingerprint[-8:]

    def test_golden_fixture(self):
        kp, mat, _ = make_recipient(drbg(1001))
        assert mat.fingerprint.hex() == "8dce882c929c44c754589be06e0b9834f480cbf9"


@given(st.binary(min_size=0, max_size=300))
@settings(max_examples=400, deadline=None)
def test_parsers_never_crash_on_fuzz(data):
    """Arbitrary octets are rejected with codec errors, never crashes."""
    from pgpforward.errors import ForwardingError

    for parser in (parse_pkesk, parse_public_key, parse_secret_key):
        try:
            parser(data)
        except ForwardingError:
            pass
    try:
        parse_kdf_params(data)
    except ForwardingError:
        pass


@given(st.binary(min_size=2, max_size=200))
@settings(max_examples=200, deadline=None)
def test_mutated_golden_pkesk_never_crashes(tail):
    from pgpforward.errors import ForwardingError

    raw = bytearray(bytes.fromhex(GOLDEN_PKESK))
    pos = tail[0] % len(raw)
    raw[pos] ^= tail[1] or 0xFF
    try:
        parse_pkesk(bytes(raw))
    except ForwardingError:
        pass
