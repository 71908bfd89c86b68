"""Six-dimension review checklist: auto prefill, human merge, compliance.

Three dimensions are machine-checkable and prefilled from the metric
snapshot; the other three (relevance, multimodal support, prompt/model
adaptation) always require human judgment and stay unknown until a
reviewer fills them in. Compliance needs at least two thirds of the six
dimensions satisfied, i.e. four; an unknown dimension cannot certify
accessibility, so unknown counts as not satisfied.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MissingRationale, UnknownDimension
from .metrics import MetricSnapshot
from .textunit import TextUnit

DIMENSIONS = (
    "lexical_clarity",
    "syntactic_simplicity",
    "structural_clarity",
    "relevance",
    "multimodal_support",
    "prompt_model_adaptation",
)
HUMAN_ONLY = ("relevance", "multimodal_support", "prompt_model_adaptation")
STATUSES = ("satisfied", "unsatisfied", "unknown")

COMPLIANCE_MIN_SATISFIED = 4  # ceil(2/3 * 6)

CHECKLIST_SCHEMA_VERSION = "1.0"

_ACRONYM_RE = re.compile(r"^[^\Wa-z0-9_]{2,}$", re.UNICODE)


@dataclass(frozen=True)
class ChecklistEntry:
    status: str  # satisfied | unsatisfied | unknown
    source: str  # auto | human
    rationale: str = ""

    def to_dict(self) -> dict:
        return {"status": self.status, "source": self.source, "rationale": self.rationale}


@dataclass(frozen=True)
class ChecklistResult:
    entries: tuple[tuple[str, ChecklistEntry], ...]
    reviewer_id: str | None = None
    policy_version: int = 0

    def __post_init__(self) -> None:
        names = [d for d, _ in self.entries]
        if tuple(names) != DIMENSIONS:
            raise UnknownDimension(f"expected exactly {DIMENSIONS}, got {tuple(names)}")
        for dim, entry in self.entries:
            if entry.status not in STATUSES:
                raise ValueError(f"{dim}: bad status {entry.status!r}")

    def entry(self, dimension: str) -> ChecklistEntry:
        for dim, entry in self.entries:
            if dim == dimension:
                return entry
        raise UnknownDimension(dimension)

    def to_dict(self) -> dict:
        return {
            "schema_version": CHECKLIST_SCHEMA_VERSION,
            "entries": {dim: e.to_dict() for dim, e in self.entries},
            "reviewer_id": self.reviewer_id,
            "policy_version": self.policy_version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChecklistResult":
        entries = []
        raw = data.get("entries", {})
        for dim in DIMENSIONS:
            row = raw.get(dim)
            if row is None:
                raise UnknownDimension(f"missing dimension {dim}")
            entries.append((dim, ChecklistEntry(
                status=row["status"], source=row.get("source", "human"),
                rationale=row.get("rationale", ""),
            )))
        extra = set(raw) - set(DIMENSIONS)
        if extra:
            raise UnknownDimension(", ".join(sorted(extra)))
        return cls(tuple(entries), data.get("reviewer_id"), data.get("policy_version", 0))


def _detect_acronyms(unit: TextUnit) -> list[str]:
    return [tok for tok in unit.tokens if _ACRONYM_RE.match(tok)]


def _has_adjacent_expansion(acronym: str, text: str) -> bool:
    # "GDPR (General Data Protection Regulation)" or "... (GDPR)"
    after = re.search(re.escape(acronym) + r"\s*\(", text)
    wrapped = re.search(r"\(\s*" + re.escape(acronym) + r"\s*\)", text)
    return bool(after or wrapped)


def auto_prefill(
    output: TextUnit,
    snapshot: MetricSnapshot,
    glossary_terms: set[str] | frozenset[str] = frozenset(),
    max_sentence_tokens: int = 20,
    structural_bar: float = 0.8,
    policy_version: int = 0,
) -> ChecklistResult:
    """Machine-checkable entries from the snapshot; the rest stay unknown."""
    long_sentences = [len(s) for s in output.sentences if len(s) > max_sentence_tokens]
    if long_sentences:
        syntactic = ChecklistEntry(
            "unsatisfied", "auto",
            f"{len(long_sentences)} sentence(s) above {max_sentence_tokens} tokens "
            f"(longest {max(long_sentences)})",
        )
    else:
        syntactic = ChecklistEntry(
            "satisfied", "auto", f"all sentences at or under {max_sentence_tokens} tokens"
        )

    known = {t.lower() for t in glossary_terms}
    unexplained = sorted({
        a for a in _detect_acronyms(output)
        if a.lower() not in known and not _has_adjacent_expansion(a, output.text)
    })
    if unexplained:
        lexical = ChecklistEntry(
            "unsatisfied", "auto",
            "acronym(s) without expansion or glossary entry: " + ", ".join(unexplained),
        )
    else:
        lexical = ChecklistEntry("satisfied", "auto", "no unexplained acronyms detected")

    if snapshot.structural_clarity >= structural_bar:
        structural = ChecklistEntry(
            "satisfied", "auto",
            f"structure proxy {snapshot.structural_clarity:.2f} at or above bar {structural_bar:.2f}",
        )
    else:
        structural = ChecklistEntry(
            "unsatisfied", "auto",
            f"structure proxy {snapshot.structural_clarity:.2f} below bar {structural_bar:.2f}",
        )

    entries = {
        "lexical_clarity": lexical,
        "syntactic_simplicity": syntactic,
        "structural_clarity": structural,
    }
    rows = tuple(
        (dim, entries.get(dim, ChecklistEntry("unknown", "auto", "needs human judgment")))
        for dim in DIMENSIONS
    )
    return ChecklistResult(rows, reviewer_id=None, policy_version=policy_version)


def merge_review(
    auto: ChecklistResult,
    human_entries: dict[str, tuple[str, str]],
    reviewer_id: str,
) -> ChecklistResult:
    """Overlay human (status, rationale) pairs; rationales are mandatory."""
    for dim, (status, rationale) in human_entries.items():
        if dim not in DIMENSIONS:
            raise UnknownDimension(dim)
        if status not in STATUSES:
            raise ValueError(f"{dim}: bad status {status!r}")
        if not rationale.strip():
            raise MissingRationale(dim)
    rows = []
    for dim, entry in auto.entries:
        if dim in human_entries:
            status, rationale = human_entries[dim]
            rows.append((dim, ChecklistEntry(status, "human", rationale)))
        else:
            rows.append((dim, entry))
    return ChecklistResult(tuple(rows), reviewer_id=reviewer_id,
                           policy_version=auto.policy_version)


def compliance(result: ChecklistResult) -> dict:
    """Two-thirds rule over all six dimensions; unknown is not satisfied."""
    satisfied = sum(1 for _, e in result.entries if e.status == "satisfied")
    evaluated = sum(1 for _, e in result.entries if e.status != "unknown")
    return {
        "compliant": satisfied >= COMPLIANCE_MIN_SATISFIED,
        "satisfied_count": satisfied,
        "evaluated_count": evaluated,
    }


def checklist_schema() -> dict:
    """Versioned JSON schema for serialized checklist results."""
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": f"accessloop/checklist/{CHECKLIST_SCHEMA_VERSION}",
        "title": "Review checklist result",
        "type": "object",
        "required": ["schema_version", "entries"],
        "properties": {
            "schema_version": {"const": CHECKLIST_SCHEMA_VERSION},
            "entries": {
                "type": "object",
                "required": list(DIMENSIONS),
                "additionalProperties": False,
                "properties": {
                    dim: {
                        "type": "object",
                        "required": ["status", "source"],
                        "properties": {
                            "status": {"enum": list(STATUSES)},
                            "source": {"enum": ["auto", "human"]},
                            "rationale": {"type": "string"},
                        },
                    }
                    for dim in DIMENSIONS
                },
            },
            "reviewer_id": {"type": ["string", "null"]},
            "policy_version": {"type": "integer"},
        },
    }
