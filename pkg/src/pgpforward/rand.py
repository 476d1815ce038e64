"""Randomness sources.

Every operation that consumes randomness takes an injected source: a
callable mapping a byte count to that many fresh octets.  Production code
uses the OS source; tests and the CLI ``--seed`` flag use the deterministic
stream below so fixtures stay stable across interpreter versions.
"""

from __future__ import annotations

import hashlib
import secrets
from typing import Callable

ByteSource = Callable[[int], bytes]

system_rng: ByteSource = secrets.token_bytes


def drbg(seed: int | bytes) -> ByteSource:
    """Deterministic byte stream: SHA-256 in counter mode over the seed.

    Not suitable for production keys; intended for tests and reproducible
    fixtures only.
    """
    if isinstance(seed, int):
        seed = seed.to_bytes(16, "big", signed=False)
    state = {"counter": 0, "buf": b""}

    def take(n: int) -> bytes:
        while len(state["buf"]) < n:
            block = hashlib.sha256(
                seed + state["counter"].to_bytes(8, "big")
            ).digest()
            state["counter"] += 1
            state["buf"] += block
        out, state["buf"] = state["buf"][:n], state["buf"][n:]
        return out

    return take
