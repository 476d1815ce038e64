#!/usr/bin/env python3
"""Benchmark the two kernel backends against each other.

Measures single-point latency and batch throughput of the x-only scalar
multiplication, plus one protocol-level figure (proxy transformations per
second).  Run from the repository root:

    python benchmarks/bench_kernels.py [--batch 4096] [--repeats 5]

The numba backend pays a one-time JIT cost (cached on disk afterwards);
warmup happens before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pgpforward.kernels import load_backend


def _rand(rng, n):
    return rng.integers(0, 256, size=(n, 32), dtype=np.uint8)


def time_single(backend, rng, repeats: int) -> float:
    k, u = _rand(rng, 1), _rand(rng, 1)
    backend.ladder_batch(k, u)  # warmup / JIT
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(10):
            backend.ladder_batch(k, u)
        best = min(best, (time.perf_counter() - t0) / 10)
    return best


def time_batch(backend, rng, batch: int, repeats: int) -> float:
    k, u = _rand(rng, batch), _rand(rng, batch)
    backend.ladder_batch(k[:4], u[:4])  # warmup / JIT
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        backend.ladder_batch(k, u)
        best = min(best, time.perf_counter() - t0)
    return best


def time_transform(repeats: int) -> float:
    """Protocol-level: validated proxy transformations per message."""
    from pgpforward.protocol import (
        generate_keypair,
        proxy_transform,
        sender_encapsulate,
        setup_forwarding,
    )
    from pgpforward.rand import drbg

    rng = drbg(12345)
    bob = generate_keypair(rng)
    grant = setup_forwarding(bob.secret, bob.fingerprint, rng)
    enc = sender_encapsulate(bob.public, rng)
    proxy_transform(grant.proxy_factor, enc.ephemeral)  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(10):
            proxy_transform(grant.proxy_factor, enc.ephemeral)
        best = min(best, (time.perf_counter() - t0) / 10)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=4096)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = []
    backends = {}
    for name in ("numba", "numpy"):
        try:
            backends[name] = load_backend(name)
        except ImportError as exc:
            print(f"{name}: unavailable ({exc})")
    for name, backend in backends.items():
        single = time_single(backend, rng, args.repeats)
        batch = time_batch(backend, rng, args.batch, args.repeats)
        rows.append((name, single, batch))

    # cross-check: identical outputs on a shared batch
    if len(backends) == 2:
        k, u = _rand(rng, 256), _rand(rng, 256)
        outs = [b.ladder_batch(k, u) for b in backends.values()]
        assert np.array_equal(outs[0], outs[1]), "backend outputs diverge"
        print("cross-check: backends agree on 256 random inputs\n")

    header = f"{'backend':<8} {'single (ms)':>12} {'batch (ms/elem)':>16} {'batch total (s)':>16}"
    print(header)
    print("-" * len(header))
    for name, single, batch in rows:
        print(
            f"{name:<8} {single * 1e3:>12.3f} {batch / args.batch * 1e3:>16.4f}"
            f" {batch:>16.3f}"
        )
    if len(rows) == 2:
        by = dict((r[0], r) for r in rows)
        speed_single = by["numpy"][1] / by["numba"][1]
        speed_batch = by["numpy"][2] / by["numba"][2]
        print(
            f"\nnumba speedup: {speed_single:.1f}x single, "
            f"{speed_batch:.1f}x on batch={args.batch}"
        )

    t = time_transform(args.repeats)
    print(f"\nproxy transformation (validate + divert): {t * 1e3:.2f} ms/message")


if __name__ == "__main__":
    main()
