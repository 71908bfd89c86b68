"""In-process orchestrator driving items through the supervision loop.

One Pipeline owns the item store, the active policy (rules, thresholds,
governance, KPI config, glossary), the audit log and the trend tracker.
Each item has a single logical writer: public methods take the item's
lock, so concurrent events serialize and history length always equals
the number of accepted events. Every transition lands in the audit log
in the same step that mutates the item.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

from .audit import AuditLog, Kind, MemoryStore, salted_text_hash
from .config import Value, get_float, get_str
from .errors import IllegalTransition, MissingComponent
from .glossary import Glossary, GlossaryEntry
from .kpi import KpiConfig, KpiRecord, UserSignals, compute_cqi, evaluate_kpis, kpi_bindings
from .metrics import MetricConfig, snapshot as take_snapshot
from .textunit import segment
from .ruledsl import (
    Action,
    ResolvedRuleSet,
    RuleSet,
    ThresholdTable,
    evaluate,
    parse_rules,
    resolve,
    serialize_trace,
)
from .workflow import (
    Event,
    GovernancePolicy,
    ReviewDecision,
    RoutingDecision,
    State,
    StubGenerator,
    TrendState,
    WorkItem,
    advance,
    make_item,
    record_decision,
    route,
)


class SystemClock:
    def now(self) -> float:
        import time

        return time.time()


class CounterClock:
    """Deterministic clock for replayable runs: start, start+step, ..."""

    def __init__(self, start: float = 1_000_000.0, step: float = 1.0):
        self._next = start
        self._step = step
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            value = self._next
            self._next += self._step
            return value


@dataclass
class WorkflowSettings:
    max_regenerations: int = 3
    missing_data_action: str = "escalate"  # or "ignore"
    combine_mode: str = "mean"
    checklist_structural_bar: float = 0.8
    kpi5_streak_limit: int = 3
    cqi_window: int = 50

    @classmethod
    def from_kv(cls, kv: dict[str, Value]) -> "WorkflowSettings":
        return cls(
            max_regenerations=int(get_float(kv, "workflow.max_regenerations", 3)),
            missing_data_action=get_str(kv, "workflow.missing_data_action", "escalate"),
            combine_mode=get_str(kv, "workflow.combine_mode", "mean"),
            checklist_structural_bar=get_float(kv, "checklist.structural_bar", 0.8),
            kpi5_streak_limit=int(get_float(kv, "workflow.kpi5_streak_limit", 3)),
            cqi_window=int(get_float(kv, "workflow.cqi_window", 50)),
        )


@dataclass
class PolicyState:
    """Everything that versions together: rules, thresholds, governance."""

    rules: RuleSet
    thresholds: ThresholdTable
    governance: GovernancePolicy
    kpi: KpiConfig
    metrics: MetricConfig
    settings: WorkflowSettings = field(default_factory=WorkflowSettings)
    glossary: Glossary = field(default_factory=Glossary)
    version: int = 1
    constraints: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        # one glossary drives generation, checklist prefill and the
        # terminology metric alike; keep the metric layer on it
        self.metrics.glossary = self.glossary

    def missing_action(self) -> Action | None:
        if self.settings.missing_data_action == "ignore":
            return None
        return Action("escalate")


class Pipeline:
    def __init__(
        self,
        policy: PolicyState,
        log: AuditLog | None = None,
        clock=None,
        signals: UserSignals | None = None,
        generator: StubGenerator | None = None,
        id_prefix: str = "item",
    ):
        self.policy = policy
        self.log = log if log is not None else AuditLog(MemoryStore())
        self.clock = clock if clock is not None else SystemClock()
        self.signals = signals
        self.generator = generator or StubGenerator(policy.metrics.structural_max_tokens)
        self.items: dict[str, WorkItem] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()
        self._id_prefix = id_prefix
        self._id_counter = 0
        self._reviewed_versions: set[int] = set()
        self._kpi5_streak = 0
        self._rolling_cqi: deque[float] = deque(maxlen=policy.settings.cqi_window)
        self._kpi_history: list[KpiRecord] = []

    # ---- helpers ----

    def _lock_for(self, item_id: str) -> threading.RLock:
        with self._registry_lock:
            lock = self._locks.get(item_id)
            if lock is None:
                lock = self._locks[item_id] = threading.RLock()
            return lock

    def _resolved_rules(self, profile: str, domain: str) -> ResolvedRuleSet:
        return resolve(self.policy.rules, self.policy.thresholds, profile, domain)

    def _release_pending(self) -> bool:
        return (
            self.policy.governance.mandatory_review_after_release
            and self.policy.version not in self._reviewed_versions
        )

    def _append(self, kind: Kind, item: WorkItem | None, payload: dict,
                actor: str = "system") -> int:
        return self.log.append(
            kind,
            item.item_id if item is not None else "-",
            payload,
            actor=actor,
            policy_version=self.policy.version,
            ts=self.clock.now(),
        )

    # ---- submission ----

    def submit(
        self,
        source_text: str,
        candidate_text: str | None,
        profile: str,
        domain: str,
        references: tuple[str, ...] = (),
        extra_metrics: dict[str, float] | None = None,
        item_id: str | None = None,
    ) -> WorkItem:
        with self._registry_lock:
            if item_id is None:
                self._id_counter += 1
                item_id = f"{self._id_prefix}-{self._id_counter:06d}"
            if item_id in self.items:
                raise ValueError(f"item id already exists: {item_id}")
        item = make_item(
            item_id, source_text, candidate_text, profile, domain,
            self.policy.version, self.policy.governance.high_risk_domains,
            language=self.policy.metrics.language,
            references=references, extra_metrics=extra_metrics,
        )
        item.created_ts = self.clock.now()
        with self._lock_for(item_id):
            self.items[item_id] = item
            payload = {
                "phase": "submitted",
                "source_text": source_text,
                "profile": profile,
                "domain": domain,
                "high_risk": item.high_risk,
                "references": list(references),
                "state": item.state.value,
            }
            if candidate_text is not None:
                payload["candidate_text"] = candidate_text
            self._append(Kind.Submitted, item, payload)
        return item

    # ---- processing ----

    def process(self, item_id: str) -> RoutingDecision:
        """Run generation (if needed), metrics, rules and routing."""
        with self._lock_for(item_id):
            item = self._get(item_id)
            if item.state is State.Submitted:
                self._generate(item)
            if item.state is not State.Generated:
                raise IllegalTransition(item.state.value, "process")
            return self._evaluate_and_route(item)

    def _get(self, item_id: str) -> WorkItem:
        item = self.items.get(item_id)
        if item is None:
            raise KeyError(f"unknown item: {item_id}")
        return item

    def _generate(self, item: WorkItem) -> None:
        text = self.generator.generate(item.source, item.profile, self.policy.glossary)
        item.candidate = segment(text, self.policy.metrics.language)
        advance(item, Event.Regenerated)
        self._append(Kind.Submitted, item, {
            "phase": "candidate_generated",
            "candidate_text": text,
            "generator": self.generator.ident,
            "transition": item.history[-1].to_dict(),
        })

    def _evaluate_and_route(self, item: WorkItem) -> RoutingDecision:
        assert item.candidate is not None
        snap = take_snapshot(
            item.source.text,
            item.candidate.text,
            self.policy.metrics,
            references=item.references,
            extra=dict(item.extra_metrics),
        )
        item.snapshot = snap
        advance(item, Event.SnapshotReady)
        self._append(Kind.Snapshot, item, {
            "snapshot": snap.to_dict(),
            "transition": item.history[-1].to_dict(),
        })

        try:
            cqi = compute_cqi(snap, self.policy.kpi)
        except MissingComponent:
            cqi = None
        item.cqi = cqi

        records: list[KpiRecord] = []
        if self.signals is not None:
            records = evaluate_kpis(self.signals, snap, self.policy.kpi, item.profile,
                                    timestamp=self.clock.now())
            self._kpi_history.extend(records)
            kpi5 = next((r for r in records if r.kpi_id == "KPI_5"), None)
            if kpi5 is not None:
                self._kpi5_streak = 0 if kpi5.satisfied else self._kpi5_streak + 1

        bindings = snap.bindings()
        bindings.update(kpi_bindings(records, item.profile))
        if cqi is not None:
            bindings["cqi"] = cqi

        resolved = self._resolved_rules(item.profile, item.domain)
        outcome = evaluate(
            resolved, bindings,
            missing_action=self.policy.missing_action(),
            combine_mode=self.policy.settings.combine_mode,
        )
        item.rule_outcome = outcome
        advance(item, Event.RulesEvaluated)
        self._append(Kind.RuleTrace, item, {
            "outcome": serialize_trace(outcome),
            "transition": item.history[-1].to_dict(),
        })
        self._append(Kind.KpiSnapshot, item, {
            "records": [r.to_dict() for r in records],
            "cqi": cqi,
        })

        forced = ()
        if item.regenerations > self.policy.settings.max_regenerations:
            forced = ("regeneration_limit",)
        decision = route(
            item, outcome, cqi, self.policy.kpi.gamma, self.policy.governance,
            policy_release_pending=self._release_pending(),
            trend=TrendState(self._kpi5_streak, tuple(self._rolling_cqi)),
            kpi5_streak_limit=self.policy.settings.kpi5_streak_limit,
            forced_reasons=forced,
        )
        item.adapt_signal = decision.adapt_signal

        if decision.action == "escalate":
            item.escalation_reasons = decision.reasons
            advance(item, Event.EscalationTriggered)
            self._append(Kind.Routing, item, {
                "decision": decision.to_dict(),
                "transition": item.history[-1].to_dict(),
            })
            advance(item, Event.EscalationTriggered)
            self._append(Kind.Routing, item, {
                "phase": "queued",
                "transition": item.history[-1].to_dict(),
            })
        else:
            advance(item, Event.AutoApproved, State.Approved)
            self._append(Kind.Routing, item, {
                "decision": decision.to_dict(),
                "transition": item.history[-1].to_dict(),
            })
            self._deliver(item)
        return decision

    def _deliver(self, item: WorkItem) -> None:
        if item.adapt_signal or item.edited_output is not None:
            advance(item, Event.AdaptationConsolidated)
            self._append(Kind.Routing, item, {
                "phase": "adaptation_queued",
                "transition": item.history[-1].to_dict(),
            })
        advance(item, Event.AutoApproved, State.Delivered)
        output = item.output
        self._append(Kind.Delivery, item, {
            "output_sha256": salted_text_hash(self.log.salt, output.text if output else ""),
            "edited": item.edited_output is not None,
            "transition": item.history[-1].to_dict(),
        })
        if item.cqi is not None:
            self._rolling_cqi.append(item.cqi)

    # ---- review ----

    def decide(self, decision: ReviewDecision) -> WorkItem:
        """Record a reviewer decision and run its consequences."""
        with self._lock_for(decision.item_id):
            item = self._get(decision.item_id)
            record_decision(item, decision, self.policy.metrics.language)
            payload = {
                "verdict": decision.verdict,
                "reviewer_id": decision.reviewer_id,
                "rationale": decision.rationale,
                "checklist": decision.checklist.to_dict(),
                "transition": item.history[-1].to_dict(),
            }
            if decision.verdict == "approve_with_edits" and decision.edited_output:
                payload["edited_sha256"] = salted_text_hash(
                    self.log.salt, decision.edited_output
                )
            self._append(Kind.ReviewDecision, item, payload,
                         actor=f"reviewer:{decision.reviewer_id}")
            if decision.verdict == "approve_with_edits" and decision.edited_output:
                self._append(Kind.Submitted, item, {
                    "phase": "edited",
                    "edited_text": decision.edited_output,
                })
            self._reviewed_versions.add(self.policy.version)
            if item.state is State.Approved:
                self._deliver(item)
            elif item.state is State.RegenerationRequested:
                self._regenerate(item)
            return item

    def _regenerate(self, item: WorkItem) -> None:
        item.regenerations += 1
        item.edited_output = None
        text = self.generator.generate(item.source, item.profile, self.policy.glossary)
        item.candidate = segment(text, self.policy.metrics.language)
        advance(item, Event.Regenerated)
        self._append(Kind.Submitted, item, {
            "phase": "candidate_generated",
            "candidate_text": text,
            "generator": self.generator.ident,
            "regeneration": item.regenerations,
            "transition": item.history[-1].to_dict(),
        })
        self._evaluate_and_route(item)

    # ---- queries ----

    def queue(self, state: State = State.InReview) -> list[WorkItem]:
        """Review queue: high-risk first, then oldest submissions first."""
        rows = [i for i in self.items.values() if i.state is state]
        rows.sort(key=lambda i: (not i.high_risk, i.created_ts, i.item_id))
        return rows

    def kpi_history(self) -> list[KpiRecord]:
        return list(self._kpi_history)

    def cqi_series(self) -> list[tuple[str, float]]:
        return [
            (i.item_id, i.cqi) for i in self.items.values() if i.cqi is not None
        ]

    # ---- policy management ----

    def apply_policy_change(
        self,
        rules_text: str | None = None,
        thresholds: ThresholdTable | None = None,
        governance: GovernancePolicy | None = None,
        kpi: KpiConfig | None = None,
        glossary_additions: tuple = (),
        constraints: tuple[str, ...] = (),
        note: str = "",
    ) -> int:
        """Install a new policy version; the change itself is audited."""
        with self._registry_lock:
            old_version = self.policy.version
            changes: list[str] = []
            if rules_text is not None:
                self.policy.rules = parse_rules(rules_text)
                changes.append("rules")
            if thresholds is not None:
                self.policy.thresholds = thresholds
                changes.append("thresholds")
            if governance is not None:
                self.policy.governance = governance.validate()
                changes.append("governance")
            if kpi is not None:
                self.policy.kpi = kpi
                changes.append("kpi")
            if glossary_additions:
                for add in glossary_additions:
                    self.policy.glossary.entries.append(
                        GlossaryEntry(add.term, add.substitute, add.note)
                    )
                changes.append("glossary")
            if constraints:
                self.policy.constraints = tuple(dict.fromkeys(
                    self.policy.constraints + tuple(constraints)
                ))
                changes.append("constraints")
            self.policy.version = old_version + 1
            self.log.append(
                Kind.PolicyChange, "-",
                {"old_version": old_version, "new_version": self.policy.version,
                 "changes": changes, "note": note},
                actor="system", policy_version=self.policy.version,
                ts=self.clock.now(),
            )
            return self.policy.version
