"""Executable security checks for the forwarding protocol.

Three instruments: the multiplication-oracle adversary (a delegate that
feeds chosen points through the proxy), the collusion identity (delegate
plus proxy recover the source secret), and statistical comparison of real
protocol views against randomized simulator views.

Scope note: computational indistinguishability cannot be established by
testing.  What runs here is shape equality plus two-sample KS tests over
each element family at desk scale, with deterministic seeds.  That is
honest evidence against gross distributional defects, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import (
    PRIME,
    CurvePoint,
    base_mul,
    base_mul_batch,
    scalar_mul,
    scalar_mul_batch,
)
from .errors import InsufficientSamples
from .messages import build_message, parse_message
from .packets import CURVE_OID, Pkesk
from .protocol import (
    ForwardingGrant,
    KeyPair,
    generate_keypair,
    proxy_transform,
    sender_encapsulate,
    setup_forwarding,
)
from .rand import ByteSource, drbg
from .scalars import N, ClampedSecret, ProxyFactor, Scalar, clamp, scalar_mul_mod

ROLE_PROXY = "proxy"
ROLE_FORWARDEE = "forwardee"
ROLE_EAVESDROPPER = "eavesdropper"
SCENARIOS = (ROLE_PROXY, ROLE_FORWARDEE, ROLE_EAVESDROPPER)

MIN_SAMPLES = 1000


# --- sampling helpers ---

def sample_clamped_batch(n: int, rng: ByteSource) -> np.ndarray:
    """(n, 32) uint8 rows, each a clamped secret drawn from chi."""
    arr = np.frombuffer(rng(32 * n), dtype=np.uint8).reshape(n, 32).copy()
    arr[:, 0] &= 248
    arr[:, 31] &= 127
    arr[:, 31] |= 64
    return arr


def _rows_to_ints(rows: np.ndarray) -> list[int]:
    return [int.from_bytes(bytes(row), "little") for row in rows]


def _ints_to_rows(values: list[int]) -> np.ndarray:
    return np.frombuffer(
        b"".join(v.to_bytes(32, "little") for v in values), dtype=np.uint8
    ).reshape(len(values), 32)


def _u_floats(rows: np.ndarray) -> np.ndarray:
    return np.array(
        [float(int.from_bytes(bytes(r), "little")) / float(PRIME) for r in rows]
    )


def _scalar_floats(values: list[int]) -> np.ndarray:
    return np.array([float(v) / float(N) for v in values])


# --- two-sample Kolmogorov-Smirnov ---

@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n_real: int
    n_sim: int
    passed: bool


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sided two-sample KS statistic with the asymptotic p-value
    p = 2 * sum_j (-1)^(j-1) exp(-2 j^2 t^2), t = D * sqrt(n*m/(n+m))."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    both = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, both, side="right") / a.size
    cdf_b = np.searchsorted(b, both, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    t = d * math.sqrt(a.size * b.size / (a.size + b.size))
    if t == 0.0:
        return d, 1.0
    p = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * t * t)
        p += term
        if abs(term) < 1e-12:
            break
    return d, min(max(p, 0.0), 1.0)


def distinguisher_test(
    real_samples: np.ndarray, sim_samples: np.ndarray, alpha: float = 0.01
) -> KsResult:
    n1, n2 = len(real_samples), len(sim_samples)
    if min(n1, n2) < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} samples per side")
    d, p = ks_two_sample(real_samples, sim_samples)
    return KsResult(d, p, n1, n2, p > alpha)


# --- one real protocol run, fully materialized ---

@dataclass(frozen=True)
class ProtocolRun:
    """Every value a single execution produces, for view construction."""

    payload: bytes  # c, carried verbatim everywhere
    recipient: KeyPair  # the original receiver
    ephemeral_share: CurvePoint  # sender's exchange share
    shared_point: CurvePoint  # the sender-side shared secret
    grants: tuple[ForwardingGrant, ...]
    transformed_shares: tuple[CurvePoint, ...]  # one per delegate
    queries: tuple[tuple[CurvePoint, ...], ...]  # chosen points, per delegate
    responses: tuple[tuple[CurvePoint, ...], ...]  # factor times each query


def run_forwarding_protocol(
    rng: ByteSource,
    n_forwardees: int = 1,
    n_queries: int = 1,
    payload: bytes = b"\xc5" * 32,
) -> ProtocolRun:
    """Execute the protocol honestly with the real primitives."""
    recipient = generate_keypair(rng)
    enc = sender_encapsulate(recipient.public, rng)
    grants = tuple(
        setup_forwarding(recipient.secret, recipient.fingerprint, rng)
        for _ in range(n_forwardees)
    )
    transformed = tuple(
        proxy_transform(g.proxy_factor, enc.ephemeral) for g in grants
    )
    queries = []
    responses = []
    for g in grants:
        qs = []
        rs = []
        for _ in range(n_queries):
            x = base_mul(clamp(rng(32)))
            qs.append(x)
            rs.append(proxy_transform(g.proxy_factor, x))
        queries.append(tuple(qs))
        responses.append(tuple(rs))
    return ProtocolRun(
        payload=payload,
        recipient=recipient,
        ephemeral_share=enc.ephemeral,
        shared_point=enc.shared_secret,
        grants=grants,
        transformed_shares=transformed,
        queries=tuple(queries),
        responses=tuple(responses),
    )


# --- views and simulators ---

@dataclass(frozen=True)
class SimulatedView:
    """Ordered, named element families mirroring what one role sees."""

    role: str
    elements: tuple[tuple[str, tuple], ...]

    def shape(self) -> tuple[tuple[str, str, int], ...]:
        out = []
        for name, values in self.elements:
            kind = "empty"
            if values:
                v = values[0]
                if isinstance(v, CurvePoint):
                    kind = "point"
                elif isinstance(v, (Scalar, ClampedSecret, ProxyFactor)):
                    kind = "scalar"
                elif isinstance(v, (bytes, bytearray)):
                    kind = "octets"
                else:
                    kind = type(v).__name__
            out.append((name, kind, len(values)))
        return tuple(out)


def build_real_view(role: str, run: ProtocolRun, index: int = 0) -> SimulatedView:
    flat_queries = tuple(q for qs in run.queries for q in qs)
    if role == ROLE_PROXY:
        return SimulatedView(
            role,
            (
                ("payload", (run.payload,)),
                ("ephemeral_share", (run.ephemeral_share,)),
                ("proxy_factor", tuple(g.proxy_factor for g in run.grants)),
                ("oracle_query", flat_queries),
            ),
        )
    if role == ROLE_FORWARDEE:
        return SimulatedView(
            role,
            (
                ("oracle_query", run.queries[index]),
                ("payload", (run.payload,)),
                ("decryption_share", (run.grants[index].new_keypair.secret,)),
                ("transformed_share", (run.transformed_shares[index],)),
                ("oracle_response", run.responses[index]),
            ),
        )
    if role == ROLE_EAVESDROPPER:
        return SimulatedView(
            role,
            (
                ("oracle_query", run.queries[index]),
                ("sender_share", (run.ephemeral_share,)),
                ("recipient_key", (run.recipient.public,)),
                ("payload", (run.payload,)),
                ("decryption_share", (run.grants[index].new_keypair.secret,)),
                ("transformed_share", (run.transformed_shares[index],)),
                ("oracle_response", run.responses[index]),
            ),
        )
    raise ValueError(f"unknown role {role!r}")


def build_sim_view(role: str, run: ProtocolRun, rng: ByteSource, index: int = 0) -> SimulatedView:
    """Randomized stand-in with the same shape as the real view.

    Proxy: fresh chi samples replace the share and each factor (as a
    quotient of two chi samples) and the submitted points.  Forwardee: the
    simulator holds the role's own input and output, so the view is
    reproduced verbatim.  Eavesdropper-forwardee: the two eavesdropped
    shares are replaced by fresh chi multiples of the base point.
    """
    if role == ROLE_PROXY:
        share = base_mul(clamp(rng(32)))
        sim_factors = []
        for _ in run.grants:
            x = clamp(rng(32)).as_scalar
            z = clamp(rng(32)).as_scalar
            sim_factors.append(ProxyFactor(scalar_mul_mod(x, Scalar(pow(z.value, N - 2, N)))))
        flat_n = sum(len(qs) for qs in run.queries)
        sim_queries = tuple(base_mul(clamp(rng(32))) for _ in range(flat_n))
        return SimulatedView(
            role,
            (
                ("payload", (run.payload,)),
                ("ephemeral_share", (share,)),
                ("proxy_factor", tuple(sim_factors)),
                ("oracle_query", sim_queries),
            ),
        )
    if role == ROLE_FORWARDEE:
        return build_real_view(role, run, index)
    if role == ROLE_EAVESDROPPER:
        real = build_real_view(role, run, index)
        replaced = []
        for name, values in real.elements:
            if name == "sender_share" or name == "recipient_key":
                replaced.append((name, (base_mul(clamp(rng(32))),)))
            else:
                replaced.append((name, values))
        return SimulatedView(role, tuple(replaced))
    raise ValueError(f"unknown role {role!r}")


# --- bulk distribution comparison (batched kernels) ---

@dataclass(frozen=True)
class FamilyComparison:
    scenario: str
    family: str
    n_samples: int
    statistic: float
    p_value: float
    passed: bool

    def line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"scenario={self.scenario} family={self.family}"
            f" n={self.n_samples} statistic={self.statistic:.5f}"
            f" p={self.p_value:.4f} verdict={verdict}"
        )


def _real_ensemble(n: int, rng: ByteSource) -> dict[str, np.ndarray | list[int]]:
    """n independent protocol executions, one delegate and one submitted
    point each, evaluated with the batch kernels."""
    d_a = sample_clamped_batch(n, rng)
    d_b = sample_clamped_batch(n, rng)
    d_i = sample_clamped_batch(n, rng)
    probe = sample_clamped_batch(n, rng)

    p_b = base_mul_batch(d_a)
    q_b = base_mul_batch(d_b)
    x = base_mul_batch(probe)

    d_b_ints = _rows_to_ints(d_b)
    d_i_ints = _rows_to_ints(d_i)
    k_ints = [
        (db % N) * pow(di % N, N - 2, N) % N for db, di in zip(d_b_ints, d_i_ints)
    ]
    k_rows = _ints_to_rows(k_ints)
    p_i = scalar_mul_batch(k_rows, p_b)
    k_x = scalar_mul_batch(k_rows, x)
    return {
        "P_B": p_b,
        "Q_B": q_b,
        "X": x,
        "k": k_ints,
        "P_i": p_i,
        "kX": k_x,
        "d_i": d_i_ints,
    }


def _sim_ensemble(n: int, rng: ByteSource) -> dict[str, np.ndarray | list[int]]:
    y = sample_clamped_batch(n, rng)
    w = sample_clamped_batch(n, rng)
    xs = _rows_to_ints(sample_clamped_batch(n, rng))
    zs = _rows_to_ints(sample_clamped_batch(n, rng))
    x_e = sample_clamped_batch(n, rng)
    y_e = sample_clamped_batch(n, rng)
    return {
        "yG": base_mul_batch(y),
        "X_sim": base_mul_batch(w),
        "k_sim": [(x % N) * pow(z % N, N - 2, N) % N for x, z in zip(xs, zs)],
        "xG_e": base_mul_batch(x_e),
        "yG_e": base_mul_batch(y_e),
    }


def view_indistinguishability(
    scenario: str, n_samples: int, seed: int, alpha: float = 0.01
) -> list[FamilyComparison]:
    """KS-compare each element family of a scenario's real view against
    its simulator, across n_samples independent executions."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    rng = drbg(seed)
    real = _real_ensemble(n_samples, rng)
    sim = _sim_ensemble(n_samples, rng)

    if scenario == ROLE_PROXY:
        families = [
            ("ephemeral_share", _u_floats(real["P_B"]), _u_floats(sim["yG"])),
            ("proxy_factor", _scalar_floats(real["k"]), _scalar_floats(sim["k_sim"])),
            ("oracle_query", _u_floats(real["X"]), _u_floats(sim["X_sim"])),
        ]
    elif scenario == ROLE_FORWARDEE:
        # trivial simulation: the simulator replays the role's own
        # input/output, so both sides are the same ensemble
        families = [
            ("oracle_query", _u_floats(real["X"]), _u_floats(real["X"])),
            ("decryption_share", _scalar_floats(real["d_i"]), _scalar_floats(real["d_i"])),
            ("transformed_share", _u_floats(real["P_i"]), _u_floats(real["P_i"])),
            ("oracle_response", _u_floats(real["kX"]), _u_floats(real["kX"])),
        ]
    else:
        families = [
            ("sender_share", _u_floats(real["P_B"]), _u_floats(sim["xG_e"])),
            ("recipient_key", _u_floats(real["Q_B"]), _u_floats(sim["yG_e"])),
            ("oracle_query", _u_floats(real["X"]), _u_floats(real["X"])),
            ("decryption_share", _scalar_floats(real["d_i"]), _scalar_floats(real["d_i"])),
            ("transformed_share", _u_floats(real["P_i"]), _u_floats(real["P_i"])),
            ("oracle_response", _u_floats(real["kX"]), _u_floats(real["kX"])),
        ]

    out = []
    for family, real_vals, sim_vals in families:
        res = distinguisher_test(real_vals, sim_vals, alpha)
        out.append(
            FamilyComparison(scenario, family, n_samples, res.statistic, res.p_value, res.passed)
        )
    return out


def run_harness(
    n_samples: int, seed: int, scenarios: tuple[str, ...] = SCENARIOS, alpha: float = 0.01
) -> list[FamilyComparison]:
    results = []
    for i, scenario in enumerate(scenarios):
        results.extend(view_indistinguishability(scenario, n_samples, seed + i, alpha))
    return results


# --- adversaries ---

@dataclass(frozen=True)
class OracleTranscript:
    """Chosen points and what the proxy returned for them; None marks a
    rejected submission."""

    factor_id: bytes  # destination key id whose factor answered
    queries: tuple[tuple[CurvePoint, CurvePoint | None], ...]

    def responses(self) -> list[CurvePoint]:
        return [r for _, r in self.queries if r is not None]


def oracle_adversary(
    service,
    source_key_id: bytes,
    n_queries: int,
    rng: ByteSource,
    points: list[CurvePoint] | None = None,
) -> OracleTranscript:
    """Drive the proxy as a multiplication oracle: submit messages carrying
    chosen exchange shares addressed to the forwarding source, and collect
    the diverted shares from the proxy's output."""
    chosen = list(points) if points is not None else []
    while len(chosen) < n_queries:
        chosen.append(base_mul(clamp(rng(32))))
    chosen = chosen[:n_queries]

    transcript: list[tuple[CurvePoint, CurvePoint | None]] = []
    factor_id = b""
    for point in chosen:
        pkesk = Pkesk(
            recipient_key_id=source_key_id,
            curve_oid=CURVE_OID,
            ephemeral=point,
            wrapped_session_key=rng(48),
        )
        armored = build_message(pkesk, rng(64))
        outputs, _report = service.process_message(armored)
        if outputs:
            dest, first = outputs[0]
            parsed = parse_message(first)
            transcript.append((point, parsed.pkesk.ephemeral))
            factor_id = factor_id or dest
        else:
            transcript.append((point, None))
    return OracleTranscript(factor_id, tuple(transcript))


def collusion_recover(forwardee_secret: ClampedSecret, factor: ProxyFactor) -> Scalar:
    """d_i * k_i mod n: a delegate colluding with the proxy recovers the
    source's secret (as a field value, sufficient to decrypt)."""
    return scalar_mul_mod(forwardee_secret.as_scalar, factor.value)


def recovered_matches(recovered: Scalar, source_secret: ClampedSecret) -> bool:
    return recovered.value == source_secret.as_scalar.value


def decapsulate_with_scalar(recovered: Scalar, ephemeral: CurvePoint) -> CurvePoint:
    """Decapsulation with a recovered (unclamped) field value; valid on
    large-subgroup shares, where only the value mod n matters."""
    return scalar_mul(recovered, ephemeral)
