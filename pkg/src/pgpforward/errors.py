"""Exception taxonomy shared by every layer of the package."""


class ForwardingError(Exception):
    """Base class for all errors raised by this package."""


# --- scalar / curve layer ---

class ZeroInverse(ForwardingError):
    """Inversion of zero requested in the order-n field."""


class InvalidRecipientKey(ForwardingError):
    """Recipient public key failed the large-subgroup membership test."""


class DegenerateSecret(ForwardingError):
    """A key agreement produced the all-zero shared value."""


class SmallSubgroupRejection(ForwardingError):
    """Ephemeral share has order dividing the cofactor; transforming it
    would leak proxy-factor residues."""


class NotInLargeSubgroup(ForwardingError):
    """Ephemeral share is not a member of the prime-order subgroup."""


# --- session crypto ---

class UnwrapIntegrityFailure(ForwardingError):
    """Session-key unwrap failed its integrity check (wrong KEK, which is
    also the observable failure for a KDF fingerprint mismatch)."""


class PayloadAuthFailure(ForwardingError):
    """Payload AEAD rejected the ciphertext (tampered or wrong key)."""


# --- codec ---

class MalformedPacket(ForwardingError):
    """Packet framing or field layout is invalid."""


class UnsupportedAlgorithm(ForwardingError):
    """Packet names an algorithm this implementation does not handle."""


class ReservedSize(MalformedPacket):
    """KDF-parameter size octet uses a reserved value (0x00 or 0xFF)."""


class UnknownVersion(MalformedPacket):
    """KDF-parameter version octet is neither 0x01 nor 0x02."""


class MissingFingerprint(MalformedPacket):
    """KDF parameters announce a fingerprint but do not carry 20 octets."""


class ChecksumMismatch(ForwardingError):
    """Armor CRC24 does not match the decoded payload."""


class BadFraming(ForwardingError):
    """Armor header/footer structure is invalid."""


class KeyIdMismatch(ForwardingError):
    """Message is not addressed to the supplied key."""


# --- proxy store / service ---

class DuplicateEntry(ForwardingError):
    """A forwarding for this (source, destination) pair already exists."""


class NotFound(ForwardingError):
    """No forwarding entry for this (source, destination) pair."""


class StorageFailure(ForwardingError):
    """Store file could not be read or written."""


class CorruptStore(ForwardingError):
    """Store file failed structural or checksum validation."""


# --- harness ---

class InsufficientSamples(ForwardingError):
    """Distinguisher invoked with fewer samples than it can judge."""
