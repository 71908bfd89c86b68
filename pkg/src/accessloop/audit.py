"""Append-only, hash-chained, replayable audit log.

Every event carries the hash of its predecessor plus its own content
hash, computed over a canonical JSON view. Raw text payload fields enter
the chain as salted content hashes, so redaction (replacing the raw text
with exactly that hash) leaves the chain intact: a redacted log still
verifies and still replays to the same states.

The chain genesis is the hash of the log header (format tag + salt), so
a tamper anywhere in an export, header included, breaks verification.

Stores implement durable ordered append plus ranged scan; the in-memory
and file-backed stores are interchangeable.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import secrets
import threading
from dataclasses import dataclass
from typing import Iterable, Protocol

from .errors import CorruptLog, DivergentState, LegalHold, RangeEmpty, StorageFailure
from .workflow import Event, State, legal_targets

TEXT_FIELDS = ("source_text", "candidate_text", "edited_text", "output_text")

_FORMAT = "audit-log/1"


class Kind(str, enum.Enum):
    Submitted = "Submitted"
    Snapshot = "Snapshot"
    RuleTrace = "RuleTrace"
    KpiSnapshot = "KpiSnapshot"
    Routing = "Routing"
    ReviewDecision = "ReviewDecision"
    PolicyChange = "PolicyChange"
    Delivery = "Delivery"
    AdaptationExport = "AdaptationExport"
    Redaction = "Redaction"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def salted_text_hash(salt: str, text: str) -> str:
    return hashlib.sha256(f"{salt}\x00{text}".encode("utf-8")).hexdigest()


def _canonical_payload(payload: dict, salt: str) -> dict:
    """Payload view for hashing: text fields collapse to salted hashes."""
    view = {}
    for key, value in payload.items():
        if key in TEXT_FIELDS:
            if isinstance(value, str):
                view[key] = {"sha256": salted_text_hash(salt, value)}
            elif isinstance(value, dict) and "sha256" in value:
                view[key] = {"sha256": value["sha256"]}
            else:
                view[key] = value
        else:
            view[key] = value
    return view


def event_hash(row: dict, salt: str) -> str:
    view = {
        "seq": row["seq"],
        "item_id": row["item_id"],
        "kind": row["kind"],
        "policy_version": row["policy_version"],
        "actor": row["actor"],
        "ts": row["ts"],
        "payload": _canonical_payload(row["payload"], salt),
        "prev_hash": row["prev_hash"],
    }
    return hashlib.sha256(canonical_json(view).encode("utf-8")).hexdigest()


def header_row(salt: str) -> dict:
    return {"format": _FORMAT, "salt": salt}


def genesis_hash(salt: str) -> str:
    return hashlib.sha256(canonical_json(header_row(salt)).encode("utf-8")).hexdigest()


class Store(Protocol):
    salt: str

    def rows(self) -> list[dict]: ...
    def append(self, row: dict) -> None: ...
    def rewrite(self, rows: list[dict]) -> None: ...


class MemoryStore:
    def __init__(self, salt: str | None = None):
        self.salt = salt if salt is not None else secrets.token_hex(16)
        self._rows: list[dict] = []

    def rows(self) -> list[dict]:
        return list(self._rows)

    def append(self, row: dict) -> None:
        self._rows.append(row)

    def rewrite(self, rows: list[dict]) -> None:
        self._rows = list(rows)


class FileStore:
    """One canonical JSON line per event, header line first."""

    def __init__(self, path: str, salt: str | None = None):
        self.path = path
        if os.path.exists(path) and os.path.getsize(path) > 0:
            with open(path, encoding="utf-8") as fh:
                header = json.loads(fh.readline())
            self.salt = header["salt"]
        else:
            self.salt = salt if salt is not None else secrets.token_hex(16)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(header_row(self.salt)) + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def rows(self) -> list[dict]:
        out = []
        with open(self.path, encoding="utf-8") as fh:
            fh.readline()  # header
            for line in fh:
                if line.strip():
                    out.append(json.loads(line))
        return out

    def append(self, row: dict) -> None:
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(canonical_json(row) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc

    def rewrite(self, rows: list[dict]) -> None:
        tmp = self.path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(header_row(self.salt)) + "\n")
            for row in rows:
                fh.write(canonical_json(row) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)


class AuditLog:
    """Single appender over a store; readers see immutable history."""

    def __init__(self, store: Store | None = None):
        self.store = store if store is not None else MemoryStore()
        self._lock = threading.Lock()
        self._idem: dict[str, int] = {}
        rows = self.store.rows()
        self._next_seq = (rows[-1]["seq"] + 1) if rows else 1
        self._prev_hash = rows[-1]["hash"] if rows else genesis_hash(self.store.salt)

    @property
    def salt(self) -> str:
        return self.store.salt

    def append(
        self,
        kind: Kind,
        item_id: str,
        payload: dict,
        *,
        actor: str = "system",
        policy_version: int = 0,
        ts: float = 0.0,
        idem_token: str | None = None,
    ) -> int:
        """Durably append one event and return its sequence number."""
        with self._lock:
            if idem_token is not None and idem_token in self._idem:
                return self._idem[idem_token]
            row = {
                "seq": self._next_seq,
                "item_id": item_id,
                "kind": kind.value,
                "policy_version": policy_version,
                "actor": actor,
                "ts": ts,
                "payload": payload,
                "prev_hash": self._prev_hash,
            }
            row["hash"] = event_hash(row, self.store.salt)
            self.store.append(row)  # raises StorageFailure; seq not consumed
            self._next_seq += 1
            self._prev_hash = row["hash"]
            if idem_token is not None:
                self._idem[idem_token] = row["seq"]
            return row["seq"]

    def rows(self, from_seq: int = 1, to_seq: int | None = None) -> list[dict]:
        return [
            r for r in self.store.rows()
            if r["seq"] >= from_seq and (to_seq is None or r["seq"] <= to_seq)
        ]

    # ---- verification ----

    def verify(self) -> int:
        """Full chain check; returns the number of verified events."""
        return verify_rows(self.store.rows(), self.store.salt)

    # ---- redaction ----

    def redact(self, item_id: str, *, legal_hold: bool = False,
               actor: str = "system", policy_version: int = 0, ts: float = 0.0) -> int:
        """Replace raw text payloads for an item with salted hashes.

        Numeric payloads, traces, kinds and the hash chain are untouched.
        Always appends one Redaction event; scrubbing is idempotent.
        """
        if legal_hold:
            raise LegalHold(f"item {item_id} is under legal hold")
        scrubbed: list[int] = []
        rows = self.store.rows()
        for row in rows:
            if row["item_id"] != item_id:
                continue
            payload = row["payload"]
            changed = False
            for fld in TEXT_FIELDS:
                value = payload.get(fld)
                if isinstance(value, str):
                    payload[fld] = {
                        "sha256": salted_text_hash(self.store.salt, value),
                        "redacted": True,
                    }
                    changed = True
            if changed:
                scrubbed.append(row["seq"])
        if scrubbed:
            self.store.rewrite(rows)
        return self.append(
            Kind.Redaction, item_id,
            {"scope": "text_payloads", "scrubbed_seqs": scrubbed},
            actor=actor, policy_version=policy_version, ts=ts,
        )

    # ---- export ----

    def export(self, from_seq: int, to_seq: int, role: str = "auditor") -> bytes:
        """Role-filtered JSON-lines export; byte-stable for fixed inputs."""
        rows = self.rows(from_seq, to_seq)
        if not rows:
            raise RangeEmpty(f"no events in [{from_seq}, {to_seq}]")
        return export_rows(rows, self.store.salt, role)


def export_rows(rows: Iterable[dict], salt: str, role: str) -> bytes:
    if role not in ("auditor", "operator", "public"):
        raise ValueError(f"unknown export role {role!r}")
    lines: list[str] = []
    if role == "auditor":
        lines.append(canonical_json(header_row(salt)))
    for row in rows:
        filtered = dict(row)
        payload = dict(row["payload"])
        if role in ("operator", "public"):
            payload.pop("reviewer_id", None)
            if filtered["actor"] != "system":
                filtered["actor"] = "reviewer"
        if role == "public":
            for fld in TEXT_FIELDS:
                value = payload.get(fld)
                if isinstance(value, str):
                    payload[fld] = {"sha256": salted_text_hash(salt, value)}
                elif isinstance(value, dict) and "sha256" in value:
                    payload[fld] = {"sha256": value["sha256"]}
        filtered["payload"] = payload
        lines.append(canonical_json(filtered))
    return ("\n".join(lines) + "\n").encode("utf-8")


def verify_rows(rows: list[dict], salt: str) -> int:
    """Check seq contiguity and the hash chain; returns events verified.

    A range starting past seq 1 anchors on its first row's prev_hash;
    a full log anchors on the header-derived genesis hash.
    """
    if not rows:
        return 0
    prev = genesis_hash(salt) if rows[0].get("seq") == 1 else rows[0].get("prev_hash")
    expected_seq = rows[0].get("seq")
    if not isinstance(expected_seq, int):
        raise CorruptLog(0, "first event has no sequence number")
    for row in rows:
        if row.get("seq") != expected_seq:
            raise CorruptLog(expected_seq, f"sequence gap (found {row.get('seq')})")
        if row.get("prev_hash") != prev:
            raise CorruptLog(expected_seq, "hash chain broken")
        try:
            recomputed = event_hash(row, salt)
        except (KeyError, TypeError, AttributeError) as exc:
            raise CorruptLog(expected_seq, f"malformed event: {exc}") from exc
        if recomputed != row.get("hash"):
            raise CorruptLog(expected_seq, "content hash mismatch")
        prev = row["hash"]
        expected_seq += 1
    return len(rows)


def verify_export(data: bytes) -> int:
    """Verify an auditor export byte-for-byte: format, chain, order."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptLog(0, f"not valid UTF-8: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptLog(0, "empty export")
    parsed = []
    for i, line in enumerate(lines):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptLog(i, f"line {i + 1} is not valid JSON: {exc.msg}") from exc
        if canonical_json(obj) != line:
            raise CorruptLog(i, f"line {i + 1} is not in canonical form")
        parsed.append(obj)
    header = parsed[0]
    if header.get("format") != _FORMAT or "salt" not in header:
        raise CorruptLog(0, "missing or malformed header")
    rows = parsed[1:]
    if not rows:
        raise CorruptLog(0, "export has no events")
    return verify_rows(rows, header["salt"])


# ---- replay ----


def replay(rows: list[dict]) -> dict[str, State]:
    """Reconstruct final item states by re-applying logged transitions.

    The log must be gap-free from seq 1. Any transition outside the
    workflow relation is a hard error naming the first divergent seq.
    """
    expected_seq = 1
    states: dict[str, State] = {}
    high_risk: dict[str, bool] = {}
    for row in rows:
        seq = row["seq"]
        if seq != expected_seq:
            raise CorruptLog(expected_seq, f"sequence gap (found {seq})")
        expected_seq += 1
        item_id = row["item_id"]
        payload = row["payload"]
        if row["kind"] == Kind.Submitted.value and payload.get("phase") == "submitted":
            if item_id in states:
                raise DivergentState(seq, f"duplicate submission for {item_id}")
            try:
                states[item_id] = State(payload["state"])
            except (KeyError, ValueError) as exc:
                raise DivergentState(seq, f"bad submission state: {exc}") from exc
            high_risk[item_id] = bool(payload.get("high_risk", False))
            continue
        transition = payload.get("transition")
        if transition is None:
            continue
        if item_id not in states:
            raise DivergentState(seq, f"transition before submission for {item_id}")
        try:
            event = Event(transition["event"])
            source = State(transition["from"])
            target = State(transition["to"])
        except (KeyError, ValueError) as exc:
            raise DivergentState(seq, f"malformed transition: {exc}") from exc
        if states[item_id] is not source:
            raise DivergentState(
                seq, f"{item_id} is in {states[item_id].value}, log says {source.value}"
            )
        if target not in legal_targets(source, event, high_risk[item_id]):
            raise DivergentState(
                seq, f"{source.value} + {event.value} -> {target.value} not allowed"
            )
        states[item_id] = target
    return states
