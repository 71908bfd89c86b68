"""Work-item lifecycle: states, guarded transitions, routing, decisions.

The state machine::

    Submitted --Regenerated--> Generated --SnapshotReady--> Evaluated
    Evaluated --RulesEvaluated--> RuleChecked
    RuleChecked --AutoApproved--> Approved          (blocked for high risk)
    RuleChecked --EscalationTriggered--> Escalated
    Escalated --EscalationTriggered--> InReview     (queue entry recorded)
    InReview --ReviewRecorded--> Approved | RegenerationRequested
    RegenerationRequested --Regenerated--> Generated
    Approved --AdaptationConsolidated--> AdaptationQueued
    Approved | AdaptationQueued --AutoApproved--> Delivered

Delivered is terminal. High-risk items can never take the auto-approve
edge, so for them every path to Delivered passes through a recorded
review; the model-check test enumerates the relation to prove it.

Routing is a pure function: it sees the rule outcome, the composite
quality index, governance policy and the deterministic sampling draw,
and returns auto-approve or escalate with every contributing reason.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

from .checklist import ChecklistResult, compliance
from .config import Value, get_bool, get_float, get_list, get_str
from .errors import (
    ConfigError,
    EmptySource,
    IllegalTransition,
    NonCompliantChecklist,
    NotInReview,
)
from .glossary import Glossary
from .metrics import MetricSnapshot
from .ruledsl import RuleOutcome
from .textunit import TextUnit, segment


class State(str, enum.Enum):
    Submitted = "Submitted"
    Generated = "Generated"
    Evaluated = "Evaluated"
    RuleChecked = "RuleChecked"
    Escalated = "Escalated"
    InReview = "InReview"
    Approved = "Approved"
    RegenerationRequested = "RegenerationRequested"
    Delivered = "Delivered"
    AdaptationQueued = "AdaptationQueued"


class Event(str, enum.Enum):
    SnapshotReady = "SnapshotReady"
    RulesEvaluated = "RulesEvaluated"
    EscalationTriggered = "EscalationTriggered"
    AutoApproved = "AutoApproved"
    ReviewRecorded = "ReviewRecorded"
    Regenerated = "Regenerated"
    AdaptationConsolidated = "AdaptationConsolidated"


TRANSITIONS: frozenset[tuple[State, Event, State]] = frozenset({
    (State.Submitted, Event.Regenerated, State.Generated),
    (State.Generated, Event.SnapshotReady, State.Evaluated),
    (State.Evaluated, Event.RulesEvaluated, State.RuleChecked),
    (State.RuleChecked, Event.AutoApproved, State.Approved),
    (State.RuleChecked, Event.EscalationTriggered, State.Escalated),
    (State.Escalated, Event.EscalationTriggered, State.InReview),
    (State.InReview, Event.ReviewRecorded, State.Approved),
    (State.InReview, Event.ReviewRecorded, State.RegenerationRequested),
    (State.RegenerationRequested, Event.Regenerated, State.Generated),
    (State.Approved, Event.AdaptationConsolidated, State.AdaptationQueued),
    (State.Approved, Event.AutoApproved, State.Delivered),
    (State.AdaptationQueued, Event.AutoApproved, State.Delivered),
})

# the one guard: high-risk items may not auto-approve out of RuleChecked
GUARDED_AUTO_APPROVE = (State.RuleChecked, Event.AutoApproved, State.Approved)


def legal_targets(state: State, event: Event, high_risk: bool) -> tuple[State, ...]:
    out = []
    for s, e, t in TRANSITIONS:
        if s is state and e is event:
            if high_risk and (s, e, t) == GUARDED_AUTO_APPROVE:
                continue
            out.append(t)
    return tuple(sorted(out, key=lambda s: s.value))


@dataclass(frozen=True)
class Transition:
    event: Event
    from_state: State
    to_state: State
    seq: int = 0

    def to_dict(self) -> dict:
        return {
            "event": self.event.value,
            "from": self.from_state.value,
            "to": self.to_state.value,
        }


@dataclass
class WorkItem:
    item_id: str
    source: TextUnit
    candidate: TextUnit | None
    profile: str
    domain: str
    high_risk: bool
    state: State
    policy_version: int
    references: tuple[str, ...] = ()
    extra_metrics: tuple[tuple[str, float], ...] = ()
    snapshot: MetricSnapshot | None = None
    rule_outcome: RuleOutcome | None = None
    checklist: ChecklistResult | None = None
    cqi: float | None = None
    escalation_reasons: tuple[str, ...] = ()
    adapt_signal: bool = False
    edited_output: TextUnit | None = None
    regenerations: int = 0
    legal_hold: bool = False
    created_ts: float = 0.0
    history: list[Transition] = field(default_factory=list)

    @property
    def output(self) -> TextUnit | None:
        return self.edited_output or self.candidate

    def version(self) -> int:
        """Optimistic-concurrency token: number of accepted events."""
        return len(self.history)


def make_item(
    item_id: str,
    source_text: str,
    candidate_text: str | None,
    profile: str,
    domain: str,
    policy_version: int,
    high_risk_domains: frozenset[str],
    language: str = "es",
    references: tuple[str, ...] = (),
    extra_metrics: dict[str, float] | None = None,
) -> WorkItem:
    """Create a submission; Generated when a candidate is already present."""
    if not source_text.strip():
        raise EmptySource("source text must be non-empty")
    candidate = segment(candidate_text, language) if candidate_text is not None else None
    return WorkItem(
        item_id=item_id,
        source=segment(source_text, language),
        candidate=candidate,
        profile=profile,
        domain=domain,
        high_risk=domain in high_risk_domains,
        state=State.Generated if candidate is not None else State.Submitted,
        policy_version=policy_version,
        references=tuple(references),
        extra_metrics=tuple(sorted((extra_metrics or {}).items())),
    )


def advance(item: WorkItem, event: Event, to: State | None = None) -> WorkItem:
    """Apply one event; the target is implied unless the pair is ambiguous."""
    targets = legal_targets(item.state, event, item.high_risk)
    if not targets:
        raise IllegalTransition(item.state.value, event.value)
    if to is None:
        if len(targets) > 1:
            raise IllegalTransition(item.state.value, event.value,
                                    "ambiguous target, caller must pick one")
        to = targets[0]
    elif to not in targets:
        raise IllegalTransition(item.state.value, event.value, to.value)
    item.history.append(Transition(event, item.state, to, seq=len(item.history) + 1))
    item.state = to
    return item


# ---- governance ----


@dataclass(frozen=True)
class GovernancePolicy:
    sampling_rate: float = 0.07
    high_risk_domains: frozenset[str] = frozenset({"health_dosage", "legal_warning"})
    mandatory_review_after_release: bool = True
    policy_version: int = 1
    rng_seed: str = "0"

    def validate(self) -> "GovernancePolicy":
        if not 0.05 <= self.sampling_rate <= 0.10:
            raise ConfigError(
                f"governance.sampling_rate must lie in [0.05, 0.10]: {self.sampling_rate}"
            )
        return self

    @classmethod
    def from_kv(cls, kv: dict[str, Value]) -> "GovernancePolicy":
        return cls(
            sampling_rate=get_float(kv, "governance.sampling_rate", 0.07),
            high_risk_domains=frozenset(get_list(
                kv, "governance.high_risk_domains", ["health_dosage", "legal_warning"]
            )),
            mandatory_review_after_release=get_bool(
                kv, "governance.mandatory_review_after_release", True
            ),
            rng_seed=get_str(kv, "governance.rng_seed", "0"),
        ).validate()


def sample_for_review(item_id: str, policy: GovernancePolicy) -> bool:
    """Deterministic governance draw; replaying inputs reproduces it."""
    digest = hashlib.sha256(f"{policy.rng_seed}:{item_id}".encode("utf-8")).digest()
    draw = int.from_bytes(digest[:8], "big") / 2.0**64
    return draw < policy.sampling_rate


# ---- routing ----

REASON_CQI = "cqi_below_gamma"
REASON_HIGH_RISK = "high_risk"
REASON_POLICY_RELEASE = "policy_release"
REASON_SAMPLE = "governance_sample"
REASON_MISSING = "missing_data"
REASON_REGEN_LIMIT = "regeneration_limit"


@dataclass(frozen=True)
class TrendState:
    """Inputs for the adaptation-signal triggers."""

    kpi5_unsatisfied_streak: int = 0
    rolling_cqi: tuple[float, ...] = ()


@dataclass(frozen=True)
class RoutingDecision:
    action: str  # auto_approve | escalate
    reasons: tuple[str, ...] = ()
    adapt_signal: bool = False

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "reasons": list(self.reasons),
            "adapt_signal": self.adapt_signal,
        }


def route(
    item: WorkItem,
    outcome: RuleOutcome,
    cqi: float | None,
    gamma: float,
    policy: GovernancePolicy,
    policy_release_pending: bool = False,
    trend: TrendState | None = None,
    kpi5_streak_limit: int = 3,
    forced_reasons: tuple[str, ...] = (),
) -> RoutingDecision:
    """Pure routing decision with every contributing reason listed."""
    if item.state is not State.RuleChecked:
        raise IllegalTransition(item.state.value, "route", "RuleChecked required")
    reasons: list[str] = list(outcome.escalations)
    if outcome.missing_data_escalation or cqi is None:
        reasons.append(REASON_MISSING)
    if cqi is not None and cqi < gamma:
        reasons.append(REASON_CQI)
    if item.high_risk:
        reasons.append(REASON_HIGH_RISK)
    if policy_release_pending:
        reasons.append(REASON_POLICY_RELEASE)
    if sample_for_review(item.item_id, policy):
        reasons.append(REASON_SAMPLE)
    for extra in forced_reasons:
        if extra not in reasons:
            reasons.append(extra)

    adapt = False
    if trend is not None:
        if trend.kpi5_unsatisfied_streak >= kpi5_streak_limit:
            adapt = True
        if trend.rolling_cqi and sum(trend.rolling_cqi) / len(trend.rolling_cqi) < gamma:
            adapt = True

    if reasons:
        return RoutingDecision("escalate", tuple(dict.fromkeys(reasons)), adapt)
    return RoutingDecision("auto_approve", (), adapt)


# ---- review decisions ----

VERDICTS = ("approve", "approve_with_edits", "request_regeneration")


@dataclass(frozen=True)
class ReviewDecision:
    item_id: str
    verdict: str
    checklist: ChecklistResult
    reviewer_id: str
    rationale: str
    edited_output: str | None = None

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}: {self.verdict!r}")
        if not self.rationale.strip():
            raise ValueError("decision rationale must be non-empty")
        if self.verdict == "approve_with_edits" and not (self.edited_output or "").strip():
            raise ValueError("approve_with_edits needs an edited output")

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "verdict": self.verdict,
            "checklist": self.checklist.to_dict(),
            "reviewer_id": self.reviewer_id,
            "rationale": self.rationale,
            "edited_output": self.edited_output,
        }


def record_decision(item: WorkItem, decision: ReviewDecision, language: str = "es") -> WorkItem:
    """Apply a reviewer decision to an item sitting in review."""
    if item.state is not State.InReview:
        raise NotInReview(f"item {item.item_id} is in {item.state.value}")
    if decision.verdict in ("approve", "approve_with_edits"):
        check = compliance(decision.checklist)
        if not check["compliant"]:
            raise NonCompliantChecklist(
                f"{check['satisfied_count']}/6 satisfied, need 4"
            )
        if decision.verdict == "approve_with_edits":
            assert decision.edited_output is not None
            if item.candidate is not None and decision.edited_output == item.candidate.text:
                raise ValueError("approve_with_edits must change the candidate output")
            item.edited_output = segment(decision.edited_output, language)
        item.checklist = decision.checklist
        advance(item, Event.ReviewRecorded, State.Approved)
    else:
        item.checklist = decision.checklist
        advance(item, Event.ReviewRecorded, State.RegenerationRequested)
    return item


# ---- generation stub ----

_CONJUNCTIONS = frozenset({"y", "e", "o", "u", "pero", "and", "or", "but"})


class StubGenerator:
    """Deterministic candidate generator for tests and demos.

    Applies glossary substitutions, then splits sentences above the token
    bar at the conjunction nearest the midpoint. Punctuation other than
    sentence breaks is not preserved; this is a stand-in for an external
    generator, not a simplifier.
    """

    ident = "stub/1"

    def __init__(self, max_sentence_tokens: int = 20):
        self.max_sentence_tokens = max_sentence_tokens

    def generate(self, source: TextUnit, profile: str, glossary: Glossary | None = None) -> str:
        sentences: list[list[str]] = [list(s) for s in source.sentences]
        if glossary is not None:
            sentences = [self._substitute(s, glossary) for s in sentences]
        out: list[list[str]] = []
        for sent in sentences:
            out.extend(self._split(sent))
        return " ".join(" ".join(s) + "." for s in out)

    def _substitute(self, tokens: list[str], glossary: Glossary) -> list[str]:
        terms = glossary.term_phrases()
        lengths = sorted({len(p.split()) for p in terms}, reverse=True) if terms else []
        out: list[str] = []
        i = 0
        while i < len(tokens):
            replaced = False
            for n in lengths:
                if i + n > len(tokens):
                    continue
                phrase = " ".join(t.lower() for t in tokens[i : i + n])
                entry = terms.get(phrase)
                if entry is not None:
                    out.extend(entry.substitute.split())
                    i += n
                    replaced = True
                    break
            if not replaced:
                out.append(tokens[i])
                i += 1
        return out

    def _split(self, tokens: list[str]) -> list[list[str]]:
        if len(tokens) <= self.max_sentence_tokens:
            return [tokens]
        mid = len(tokens) / 2
        cut = None
        best = None
        for i, tok in enumerate(tokens):
            if tok.lower() in _CONJUNCTIONS and 2 <= i <= len(tokens) - 3:
                score = abs(i - mid)
                if best is None or score < best:
                    best = score
                    cut = i
        if cut is None:
            return [tokens]
        left, right = tokens[:cut], tokens[cut + 1 :]
        return self._split(left) + self._split(right)


# ---- model checking support ----


def reachable_with_paths(
    high_risk: bool,
    exclude: frozenset[tuple[State, Event, State]] = frozenset(),
    start: State = State.Submitted,
) -> set[State]:
    """States reachable from `start` under the guarded relation."""
    seen = {start}
    frontier = [start]
    while frontier:
        current = frontier.pop()
        for s, e, t in TRANSITIONS:
            if s is not current or (s, e, t) in exclude:
                continue
            if high_risk and (s, e, t) == GUARDED_AUTO_APPROVE:
                continue
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return seen
