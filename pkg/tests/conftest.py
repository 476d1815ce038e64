"""Shared fixtures.

Seeds are fixed so every run of the suite sees identical randomness; the
deterministic stream is the package's own SHA-256 counter DRBG, stable
across interpreter versions.
"""

import pytest

from pgpforward.packets import KdfParams, PublicKeyMaterial, SecretKeyMaterial
from pgpforward.protocol import generate_keypair
from pgpforward.rand import drbg

# published seed list: every deterministic stream in the suite comes from here
SEEDS = {
    "kernels": 101,
    "scalars": 202,
    "curve": 303,
    "protocol": 404,
    "session": 505,
    "codec": 606,
    "armor": 707,
    "proxy": 808,
    "harness": 909,
    "acceptance": 1010,
    "fixture-key": 1001,
}


@pytest.fixture
def rng():
    return drbg(4242)


def make_recipient(rng, version=1, kdf_fingerprint=None):
    """Key pair plus key material; version 2 embeds the given fingerprint."""
    kp = generate_keypair(rng)
    if version == 1:
        kdf = KdfParams(1, 0x08, 0x09)
    else:
        kdf = KdfParams(2, 0x08, 0x09, 0x01, kdf_fingerprint)
    mat = PublicKeyMaterial(kp.public, kdf)
    return kp, mat, SecretKeyMaterial(mat, kp.secret)
