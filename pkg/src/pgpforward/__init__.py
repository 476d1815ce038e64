"""Delegated decryption for OpenPGP-style messages.

A recipient can hand a semi-trusted relay a single field element (the
proxy factor) that lets it divert incoming encrypted messages to a
freshly issued delegate key, without the relay ever being able to decrypt
or either party learning the other's secret.  This package implements the
scalar and curve arithmetic, the forwarding protocol, the packet codec,
the proxy pipeline, a security harness, and an operator CLI.
"""

from .curve import BASE_POINT, COFACTOR, IDENTITY, ORDER, PRIME, CurvePoint
from .errors import ForwardingError
from .messages import decrypt_message, encrypt_message
from .packets import KdfParams, Pkesk, PublicKeyMaterial, SecretKeyMaterial
from .protocol import (
    Encapsulation,
    ForwardingGrant,
    KeyPair,
    forwarded_decapsulate,
    generate_keypair,
    proxy_transform,
    receiver_decapsulate,
    sender_encapsulate,
    setup_forwarding,
)
from .proxy import ForwardingEntry, ProxyService, ProxyStore
from .scalars import (
    N,
    ClampedSecret,
    ProxyFactor,
    Scalar,
    clamp,
    derive_proxy_factor,
    scalar_from_bytes,
    scalar_invert,
    scalar_mul_mod,
)

__version__ = "0.1.0"

__all__ = [
    "BASE_POINT",
    "COFACTOR",
    "IDENTITY",
    "ORDER",
    "PRIME",
    "N",
    "ClampedSecret",
    "CurvePoint",
    "Encapsulation",
    "ForwardingEntry",
    "ForwardingError",
    "ForwardingGrant",
    "KdfParams",
    "KeyPair",
    "Pkesk",
    "ProxyFactor",
    "ProxyService",
    "ProxyStore",
    "PublicKeyMaterial",
    "Scalar",
    "SecretKeyMaterial",
    "clamp",
    "decrypt_message",
    "derive_proxy_factor",
    "encrypt_message",
    "forwarded_decapsulate",
    "generate_keypair",
    "proxy_transform",
    "receiver_decapsulate",
    "scalar_from_bytes",
    "scalar_invert",
    "scalar_mul_mod",
    "sender_encapsulate",
    "setup_forwarding",
    "__version__",
]
