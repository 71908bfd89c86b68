"""Consolidate review outcomes into policy updates and training exports.

Three jobs, all batch-style over audit history:

* consolidate: recurring lexical edits become glossary-addition
  candidates, recurring checklist failures become prompt-constraint
  deltas. Nothing auto-applies; proposals always wait for a human.
* export_preferences: every approve-with-edits decision yields one
  (chosen, rejected) pair with provenance, serialized as JSON lines.
* recalibrate: observed per-profile acceptance rates, minus a safety
  margin, become threshold proposals once enough evidence exists.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

from .audit import Kind, canonical_json
from .checklist import DIMENSIONS
from .errors import InsufficientData
from .kpi import SynonymJudgment, acceptance_rate
from .textunit import tokenize

CONSTRAINT_TEXT = {
    "lexical_clarity": "use common words and expand acronyms",
    "syntactic_simplicity": "split sentences above 20 words",
    "structural_clarity": "keep a logical order with headings and lists",
    "relevance": "preserve essential information and avoid redundancy",
    "multimodal_support": "attach glossary or pictogram support",
    "prompt_model_adaptation": "encode approved glossary constraints in prompts",
}


@dataclass(frozen=True)
class EditCase:
    """One review decision with the texts it acted on."""

    item_id: str
    decision_seq: int
    verdict: str
    reviewer_id: str
    source_text: str
    candidate_text: str
    edited_text: str | None
    profile: str
    checklist_entries: tuple[tuple[str, str, str], ...] = ()  # (dimension, status, rationale)


@dataclass(frozen=True)
class GlossaryAddition:
    term: str
    substitute: str
    note: str
    evidence: tuple[int, ...]  # decision seqs


@dataclass(frozen=True)
class ThresholdProposal:
    profile: str
    domain: str
    symbol: str
    old: float | None
    proposed: float
    evidence_count: int


@dataclass(frozen=True)
class PolicyUpdate:
    glossary_additions: tuple[GlossaryAddition, ...] = ()
    prompt_constraint_deltas: tuple[str, ...] = ()
    threshold_proposals: tuple[ThresholdProposal, ...] = ()

    @property
    def version_bump(self) -> bool:
        return bool(self.glossary_additions or self.prompt_constraint_deltas
                    or self.threshold_proposals)

    def to_dict(self) -> dict:
        return {
            "glossary_additions": [
                {"term": g.term, "substitute": g.substitute, "note": g.note,
                 "evidence": list(g.evidence)}
                for g in self.glossary_additions
            ],
            "prompt_constraint_deltas": list(self.prompt_constraint_deltas),
            "threshold_proposals": [
                {"profile": p.profile, "domain": p.domain, "symbol": p.symbol,
                 "old": p.old, "proposed": p.proposed,
                 "evidence_count": p.evidence_count}
                for p in self.threshold_proposals
            ],
            "version_bump": self.version_bump,
        }


@dataclass(frozen=True)
class PreferencePair:
    source_text: str
    profile: str
    constraints: tuple[str, ...]
    chosen: str
    rejected: str
    decision_seq: int
    reviewer_id: str
    checklist_rationales: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "context": {
                "source": self.source_text,
                "profile": self.profile,
                "constraints": list(self.constraints),
            },
            "chosen": self.chosen,
            "rejected": self.rejected,
            "provenance": {
                "decision_seq": self.decision_seq,
                "reviewer_id": self.reviewer_id,
                "checklist_rationales": list(self.checklist_rationales),
            },
        }


def cases_from_audit(rows: list[dict]) -> list[EditCase]:
    """Reconstruct decision cases from the audit stream.

    Candidate texts come from submission/generation events, edited texts
    from the edited-output events recorded alongside each decision, so
    adaptation only ever consumes what the log proves happened.
    """
    source: dict[str, str] = {}
    candidate: dict[str, str] = {}
    profile: dict[str, str] = {}
    pending: dict[str, EditCase] = {}
    cases: list[EditCase] = []
    for row in rows:
        item_id = row["item_id"]
        payload = row["payload"]
        if row["kind"] == Kind.Submitted.value:
            phase = payload.get("phase")
            if phase == "submitted":
                if isinstance(payload.get("source_text"), str):
                    source[item_id] = payload["source_text"]
                if isinstance(payload.get("candidate_text"), str):
                    candidate[item_id] = payload["candidate_text"]
                profile[item_id] = payload.get("profile", "")
            elif phase == "candidate_generated":
                if isinstance(payload.get("candidate_text"), str):
                    candidate[item_id] = payload["candidate_text"]
            elif phase == "edited" and item_id in pending:
                case = pending.pop(item_id)
                if isinstance(payload.get("edited_text"), str):
                    cases.append(EditCase(
                        item_id=case.item_id, decision_seq=case.decision_seq,
                        verdict=case.verdict, reviewer_id=case.reviewer_id,
                        source_text=case.source_text,
                        candidate_text=case.candidate_text,
                        edited_text=payload["edited_text"],
                        profile=case.profile,
                        checklist_entries=case.checklist_entries,
                    ))
        elif row["kind"] == Kind.ReviewDecision.value:
            entries = tuple(
                (dim, entry.get("status", "unknown"), entry.get("rationale", ""))
                for dim, entry in sorted(payload.get("checklist", {}).get("entries", {}).items())
            )
            case = EditCase(
                item_id=item_id,
                decision_seq=row["seq"],
                verdict=payload.get("verdict", ""),
                reviewer_id=payload.get("reviewer_id", ""),
                source_text=source.get(item_id, ""),
                candidate_text=candidate.get(item_id, ""),
                edited_text=None,
                profile=profile.get(item_id, ""),
                checklist_entries=entries,
            )
            if payload.get("verdict") == "approve_with_edits":
                pending[item_id] = case  # edited text arrives in the next event
            else:
                cases.append(case)
    return cases


def extract_edit_pair(candidate_text: str, edited_text: str) -> tuple[str, str] | None:
    """Replaced phrase pair via common prefix/suffix token alignment."""
    old = [t.lower() for t in tokenize(candidate_text)]
    new = [t.lower() for t in tokenize(edited_text)]
    p = 0
    while p < min(len(old), len(new)) and old[p] == new[p]:
        p += 1
    s = 0
    while s < min(len(old), len(new)) - p and old[len(old) - 1 - s] == new[len(new) - 1 - s]:
        s += 1
    old_mid = old[p : len(old) - s]
    new_mid = new[p : len(new) - s]
    if not old_mid and not new_mid:
        return None
    return " ".join(old_mid), " ".join(new_mid)


def consolidate(cases: list[EditCase], min_repeats: int = 2) -> PolicyUpdate:
    """Promote repeated edits and recurring failures to proposals.

    A lexical pair must recur across `min_repeats` distinct items to
    become a glossary addition; order of cases never matters.
    """
    pair_items: dict[tuple[str, str], set[str]] = defaultdict(set)
    pair_seqs: dict[tuple[str, str], set[int]] = defaultdict(set)
    failure_items: dict[str, set[str]] = defaultdict(set)

    for case in sorted(cases, key=lambda c: c.decision_seq):
        if case.verdict == "approve_with_edits" and case.edited_text:
            pair = extract_edit_pair(case.candidate_text, case.edited_text)
            if pair is not None and pair[0] and pair[1]:
                pair_items[pair].add(case.item_id)
                pair_seqs[pair].add(case.decision_seq)
        for dim, status, _ in case.checklist_entries:
            if status == "unsatisfied" and dim in DIMENSIONS:
                failure_items[dim].add(case.item_id)

    additions = tuple(
        GlossaryAddition(
            term=term,
            substitute=substitute,
            note=f"seen in {len(pair_items[(term, substitute)])} review edit(s)",
            evidence=tuple(sorted(pair_seqs[(term, substitute)])),
        )
        for term, substitute in sorted(pair_items)
        if len(pair_items[(term, substitute)]) >= min_repeats
    )
    constraints = tuple(
        CONSTRAINT_TEXT[dim]
        for dim in DIMENSIONS
        if len(failure_items.get(dim, ())) >= min_repeats
    )
    return PolicyUpdate(glossary_additions=additions, prompt_constraint_deltas=constraints)


def export_preferences(cases: list[EditCase],
                       constraints: tuple[str, ...] = ()) -> list[PreferencePair]:
    """One preference pair per approve-with-edits decision."""
    pairs = []
    for case in sorted(cases, key=lambda c: c.decision_seq):
        if case.verdict != "approve_with_edits" or not case.edited_text:
            continue
        pairs.append(PreferencePair(
            source_text=case.source_text,
            profile=case.profile,
            constraints=constraints,
            chosen=case.edited_text,
            rejected=case.candidate_text,
            decision_seq=case.decision_seq,
            reviewer_id=case.reviewer_id,
            checklist_rationales=tuple(
                rationale for _, _, rationale in case.checklist_entries if rationale
            ),
        ))
    return pairs


def preferences_to_jsonl(pairs: list[PreferencePair]) -> str:
    return "".join(canonical_json(p.to_dict()) + "\n" for p in pairs)


def recalibrate(
    judgments: list[SynonymJudgment],
    current_theta: dict[str, float],
    n_min: int = 30,
    margin: float = 0.05,
) -> list[ThresholdProposal]:
    """Per-profile theta proposals from observed at-least-one rates.

    Proposals never auto-apply; identical-to-current proposals are
    suppressed.
    """
    counts = Counter(j.profile for j in judgments)
    proposals = []
    for prof in sorted(counts):
        n = counts[prof]
        if n < n_min:
            raise InsufficientData(prof, n, n_min)
        rate = acceptance_rate(judgments, prof, "at_least_one")
        proposed = min(max(rate - margin, 0.0), 1.0)
        old = current_theta.get(prof)
        if old is not None and abs(proposed - old) < 1e-12:
            continue
        proposals.append(ThresholdProposal(
            profile=prof, domain="*", symbol="theta_profile",
            old=old, proposed=proposed, evidence_count=n,
        ))
    return proposals


def glossary_tsv_lines(additions: tuple[GlossaryAddition, ...]) -> str:
    return "".join(f"{g.term}\t{g.substitute}\t{g.note}\n" for g in additions)
