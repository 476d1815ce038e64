"""Transformation proxy: factor store, trust filters, and the message
pipeline that rewrites key-exchange packets and fans out to delegates.

The proxy's whole state is factors, key ids and fingerprints; it never
holds a secret scalar or shared point.  Payload packets pass through
byte-identically.
"""

from __future__ import annotations

import fnmatch
import os
import threading
import time
import zlib
from dataclasses import dataclass, field, replace

from .armor import LABEL_MESSAGE, armor, dearmor
from .errors import (
    CorruptStore,
    DuplicateEntry,
    NotFound,
    NotInLargeSubgroup,
    SmallSubgroupRejection,
    StorageFailure,
)
from .messages import parse_message_bytes
from .packets import rewrite_pkesk, serialize_pkesk
from .protocol import proxy_transform
from .scalars import ProxyFactor

KEY_ID_BYTES = 8
FINGERPRINT_BYTES = 20

STORE_MAGIC = b"PGPFWDST"
STORE_VERSION = 1
_RECORD_LEN = KEY_ID_BYTES * 2 + 32 + FINGERPRINT_BYTES + 1

OUTCOME_DELIVERED = "delivered"
OUTCOME_SMALL_SUBGROUP = "rejected-small-subgroup"
OUTCOME_NOT_IN_SUBGROUP = "rejected-not-in-subgroup"
OUTCOME_FILTERED = "filtered"
OUTCOME_CYCLE = "skipped-cycle"


@dataclass(frozen=True)
class ForwardingEntry:
    source_key_id: bytes
    dest_key_id: bytes
    proxy_factor: ProxyFactor
    source_fingerprint: bytes
    enabled: bool = True

    def __post_init__(self) -> None:
        if len(self.source_key_id) != KEY_ID_BYTES or len(self.dest_key_id) != KEY_ID_BYTES:
            raise ValueError("key ids must be 8 octets")
        if len(self.source_fingerprint) != FINGERPRINT_BYTES:
            raise ValueError("source fingerprint must be 20 octets")


@dataclass(frozen=True)
class FilterRule:
    """Trust-layer rule over unencrypted metadata only.  field is
    'sender', 'recipient', or a header name; pattern is a literal or
    glob; first matching rule decides."""

    field: str
    pattern: str
    action: str  # "forward" | "drop"

    def __post_init__(self) -> None:
        if self.action not in ("forward", "drop"):
            raise ValueError("action must be forward or drop")


@dataclass(frozen=True)
class EntryOutcome:
    source_key_id: bytes
    dest_key_id: bytes
    outcome: str
    hop: int = 1


@dataclass
class TransformReport:
    input_key_id: bytes
    outcomes: list[EntryOutcome] = field(default_factory=list)
    elapsed_ms: float = 0.0  # whole-message timing only, coarse by design

    def to_lines(self) -> list[str]:
        lines = []
        for o in self.outcomes:
            lines.append(
                "entry"
                f" source={o.source_key_id.hex()}"
                f" dest={o.dest_key_id.hex()}"
                f" hop={o.hop}"
                f" outcome={o.outcome}"
            )
        lines.append(
            f"message input={self.input_key_id.hex()}"
            f" outcomes={len(self.outcomes)}"
            f" elapsed_ms={self.elapsed_ms:.1f}"
        )
        return lines


class ProxyStore:
    """In-memory entry set with binary persistence.

    Concurrent readers see consistent snapshots; mutations (register,
    revoke, save) serialize on an internal lock.
    """

    def __init__(self, entries: list[ForwardingEntry] | None = None):
        self._lock = threading.RLock()
        self._entries: dict[tuple[bytes, bytes], ForwardingEntry] = {}
        for e in entries or []:
            self.register(e)

    def register(self, entry: ForwardingEntry) -> None:
        key = (entry.source_key_id, entry.dest_key_id)
        with self._lock:
            if key in self._entries:
                raise DuplicateEntry(
                    f"forwarding {key[0].hex()} -> {key[1].hex()} already registered"
                )
            self._entries[key] = entry

    def revoke(self, source_key_id: bytes, dest_key_id: bytes) -> None:
        key = (source_key_id, dest_key_id)
        with self._lock:
            entry = self._entries.get(key)
            if entry is None or not entry.enabled:
                raise NotFound(f"no active forwarding {key[0].hex()} -> {key[1].hex()}")
            self._entries[key] = replace(entry, enabled=False)

    def lookup_enabled(self, source_key_id: bytes) -> list[ForwardingEntry]:
        with self._lock:
            return [
                e
                for e in self._entries.values()
                if e.enabled and e.source_key_id == source_key_id
            ]

    def entries(self) -> list[ForwardingEntry]:
        with self._lock:
            return list(self._entries.values())

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


def _serialize_store(store: ProxyStore) -> bytes:
    body = bytearray()
    body += STORE_MAGIC
    body.append(STORE_VERSION)
    entries = store.entries()
    body += len(entries).to_bytes(4, "big")
    for e in entries:
        body.append(_RECORD_LEN)
        body += e.source_key_id
        body += e.dest_key_id
        body += e.proxy_factor.encode()
        body += e.source_fingerprint
        body.append(1 if e.enabled else 0)
    body += zlib.crc32(bytes(body)).to_bytes(4, "big")
    return bytes(body)


def _parse_store(data: bytes) -> ProxyStore:
    if len(data) < len(STORE_MAGIC) + 9:
        raise CorruptStore("store file shorter than header")
    if data[: len(STORE_MAGIC)] != STORE_MAGIC:
        raise CorruptStore("bad magic")
    if data[len(STORE_MAGIC)] != STORE_VERSION:
        raise CorruptStore(f"unsupported store version {data[len(STORE_MAGIC)]}")
    declared = int.from_bytes(data[-4:], "big")
    if zlib.crc32(data[:-4]) != declared:
        raise CorruptStore("checksum mismatch")
    count = int.from_bytes(data[len(STORE_MAGIC) + 1 : len(STORE_MAGIC) + 5], "big")
    offset = len(STORE_MAGIC) + 5
    store = ProxyStore()
    for _ in range(count):
        if offset >= len(data) - 4:
            raise CorruptStore("truncated record list")
        rec_len = data[offset]
        offset += 1
        if rec_len != _RECORD_LEN or offset + rec_len > len(data) - 4:
            raise CorruptStore("bad record length")
        rec = data[offset : offset + rec_len]
        offset += rec_len
        entry = ForwardingEntry(
            source_key_id=rec[0:8],
            dest_key_id=rec[8:16],
            proxy_factor=ProxyFactor.from_bytes(rec[16:48]),
            source_fingerprint=rec[48:68],
            enabled=bool(rec[68]),
        )
        store._entries[(entry.source_key_id, entry.dest_key_id)] = entry
    if offset != len(data) - 4:
        raise CorruptStore("trailing octets after records")
    return store


def store_save(store: ProxyStore, path: str) -> None:
    """Atomic replace: the new file is complete before it takes the name."""
    data = _serialize_store(store)
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise StorageFailure(f"cannot write store: {exc}") from None


def store_load(path: str) -> ProxyStore:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise StorageFailure(f"cannot read store: {exc}") from None
    return _parse_store(data)


# --- metadata and filters ---

def parse_metadata(text: str) -> dict[str, str]:
    """Line-oriented 'Name: value' sidecar; names lower-cased."""
    meta: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, value = line.partition(":")
        if not sep:
            continue
        meta[name.strip().lower()] = value.strip()
    return meta


def parse_rules(text: str) -> list[FilterRule]:
    """One rule per line: '<action> <field> <pattern>'."""
    rules = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) != 3:
            raise ValueError(f"bad filter rule: {line!r}")
        action, fieldname, pattern = parts
        rules.append(FilterRule(fieldname.lower(), pattern, action.lower()))
    return rules


def evaluate_rules(rules: list[FilterRule], metadata: dict[str, str]) -> str:
    """First matching rule decides; default forward."""
    for rule in rules:
        value = metadata.get(rule.field, "")
        if fnmatch.fnmatchcase(value.lower(), rule.pattern.lower()):
            return rule.action
    return "forward"


# --- the pipeline ---

class ProxyService:
    """Ingests armored messages and emits one transformed copy per
    matching enabled entry, chaining breadth-first when a delegate is
    itself a forwarding source."""

    def __init__(
        self,
        store: ProxyStore,
        rules: list[FilterRule] | None = None,
        max_chain_depth: int = 8,
    ):
        self.store = store
        self.rules = list(rules or [])
        self.max_chain_depth = max_chain_depth

    def process_message(
        self, armored: str, metadata: dict[str, str] | None = None
    ) -> tuple[list[tuple[bytes, str]], TransformReport]:
        started = time.perf_counter()
        data, _ = dearmor(armored, LABEL_MESSAGE)
        parsed = parse_message_bytes(data)
        decision = evaluate_rules(self.rules, metadata or {})

        report = TransformReport(input_key_id=parsed.pkesk.recipient_key_id)
        outputs: list[tuple[bytes, str]] = []
        visited = {parsed.pkesk.recipient_key_id}
        frontier = [(parsed.pkesk, 1)]
        while frontier:
            pkesk, hop = frontier.pop(0)
            for entry in self.store.lookup_enabled(pkesk.recipient_key_id):
                if decision == "drop":
                    report.outcomes.append(
                        EntryOutcome(entry.source_key_id, entry.dest_key_id,
                                     OUTCOME_FILTERED, hop)
                    )
                    continue
                if entry.dest_key_id in visited:
                    report.outcomes.append(
                        EntryOutcome(entry.source_key_id, entry.dest_key_id,
                                     OUTCOME_CYCLE, hop)
                    )
                    continue
                try:
                    diverted = proxy_transform(entry.proxy_factor, pkesk.ephemeral)
                except SmallSubgroupRejection:
                    report.outcomes.append(
                        EntryOutcome(entry.source_key_id, entry.dest_key_id,
                                     OUTCOME_SMALL_SUBGROUP, hop)
                    )
                    continue
                except NotInLargeSubgroup:
                    report.outcomes.append(
                        EntryOutcome(entry.source_key_id, entry.dest_key_id,
                                     OUTCOME_NOT_IN_SUBGROUP, hop)
                    )
                    continue
                rewritten = rewrite_pkesk(pkesk, diverted, entry.dest_key_id)
                outputs.append(
                    (
                        entry.dest_key_id,
                        armor(serialize_pkesk(rewritten) + parsed.payload_raw,
                              LABEL_MESSAGE),
                    )
                )
                report.outcomes.append(
                    EntryOutcome(entry.source_key_id, entry.dest_key_id,
                                 OUTCOME_DELIVERED, hop)
                )
                visited.add(entry.dest_key_id)
                if hop < self.max_chain_depth:
                    frontier.append((rewritten, hop + 1))
        report.elapsed_ms = (time.perf_counter() - started) * 1e3
        return outputs, report
