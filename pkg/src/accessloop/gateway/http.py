"""JSON-over-HTTP surface for the pipeline.

Static bearer tokens map to roles (operator, reviewer, auditor); the
reviewer console and batch jobs are both clients of this API. Every
state-mutating endpoint runs through the pipeline, so it produces
exactly one audit chain segment; GET endpoints never write.

Server-side enforcement is authoritative: the checklist sent with a
decision is rebuilt from an auto prefill of the text under review plus
the submitted human entries, so a client with disabled guards cannot
sneak an invalid decision through.
"""

from __future__ import annotations

from dataclasses import dataclass

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Response
from pydantic import BaseModel, Field

from ..checklist import auto_prefill, compliance, merge_review
from ..errors import (
    AccessLoopError,
    EmptySource,
    IllegalTransition,
    MissingRationale,
    NonCompliantChecklist,
    NotInReview,
    RangeEmpty,
    UnknownDimension,
)
from ..kpi import KpiConfig
from ..metrics import snapshot as take_snapshot
from ..pipeline import Pipeline
from ..ruledsl import ThresholdTable, parse_rules, print_rules
from ..textunit import segment
from ..workflow import GovernancePolicy, ReviewDecision, State

MAX_TEXT_BYTES = 1_000_000

_ROLE_RANK = {"public": 0, "reviewer": 1, "operator": 2, "auditor": 3}


@dataclass(frozen=True)
class Session:
    role: str
    reviewer_id: str | None = None


class SubmitRequest(BaseModel):
    source: str
    candidate: str | None = None
    profile: str = "default"
    domain: str = "general"
    references: list[str] = Field(default_factory=list)
    extra_metrics: dict[str, float] = Field(default_factory=dict)
    process: bool = False


class HumanEntry(BaseModel):
    status: str
    rationale: str = ""


class DecisionRequest(BaseModel):
    verdict: str
    rationale: str
    human_entries: dict[str, HumanEntry] = Field(default_factory=dict)
    edited_output: str | None = None
    expected_version: int | None = None


class PolicyRequest(BaseModel):
    rules_text: str | None = None
    thresholds_text: str | None = None
    governance_text: str | None = None
    kpi_text: str | None = None
    note: str = ""


def _check_text(name: str, value: str | None) -> None:
    if value is None:
        return
    if len(value.encode("utf-8", errors="replace")) > MAX_TEXT_BYTES:
        raise HTTPException(400, f"{name} exceeds {MAX_TEXT_BYTES} bytes")


def item_view(pipe: Pipeline, item_id: str) -> dict:
    item = pipe.items.get(item_id)
    if item is None:
        raise HTTPException(404, f"unknown item {item_id}")
    view: dict = {
        "id": item.item_id,
        "state": item.state.value,
        "profile": item.profile,
        "domain": item.domain,
        "high_risk": item.high_risk,
        "policy_version": item.policy_version,
        "version": item.version(),
        "source": item.source.text,
        "candidate": item.candidate.text if item.candidate else None,
        "edited_output": item.edited_output.text if item.edited_output else None,
        "cqi": item.cqi,
        "gamma": pipe.policy.kpi.gamma,
        "escalation_reasons": list(item.escalation_reasons),
        "adapt_signal": item.adapt_signal,
        "history": [t.to_dict() for t in item.history],
        "snapshot": item.snapshot.to_dict() if item.snapshot else None,
        "bindings": item.snapshot.bindings() if item.snapshot else {},
        "rule_trace": item.rule_outcome.to_dict() if item.rule_outcome else None,
        "checklist": item.checklist.to_dict() if item.checklist else None,
        # terminology highlights for the reviewer console's diff
        "glossary_terms": sorted(pipe.policy.glossary.term_phrases()),
    }
    if item.state is State.InReview and item.candidate is not None \
            and item.snapshot is not None:
        prefill = auto_prefill(
            item.candidate,
            item.snapshot,
            glossary_terms=set(pipe.policy.glossary.term_phrases()),
            max_sentence_tokens=pipe.policy.metrics.structural_max_tokens,
            structural_bar=pipe.policy.settings.checklist_structural_bar,
            policy_version=pipe.policy.version,
        )
        view["checklist_prefill"] = prefill.to_dict()
    return view


def create_app(pipe: Pipeline, tokens: dict[str, Session]) -> FastAPI:
    app = FastAPI(title="accessloop gateway", version="0.1.0")

    def session(authorization: str | None = Header(default=None)) -> Session:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(403, "missing bearer token")
        sess = tokens.get(authorization.removeprefix("Bearer ").strip())
        if sess is None:
            raise HTTPException(403, "unknown token")
        return sess

    def require(sess: Session, *roles: str) -> None:
        if sess.role not in roles:
            raise HTTPException(403, f"role {sess.role} may not use this endpoint")

    @app.exception_handler(AccessLoopError)
    async def _domain_error(_, exc: AccessLoopError):  # pragma: no cover - wiring
        raise HTTPException(400, str(exc))

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "policy_version": pipe.policy.version}

    @app.post("/items", status_code=201)
    def submit(req: SubmitRequest, sess: Session = Depends(session)) -> dict:
        require(sess, "operator")
        _check_text("source", req.source)
        _check_text("candidate", req.candidate)
        try:
            item = pipe.submit(
                req.source, req.candidate, req.profile, req.domain,
                references=tuple(req.references),
                extra_metrics=req.extra_metrics or None,
            )
        except (EmptySource, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        body = {"id": item.item_id, "state": item.state.value}
        if req.process:
            decision = pipe.process(item.item_id)
            body["state"] = item.state.value
            body["routing"] = decision.to_dict()
        return body

    @app.post("/items/{item_id}/process")
    def process(item_id: str, sess: Session = Depends(session)) -> dict:
        require(sess, "operator")
        if item_id not in pipe.items:
            raise HTTPException(404, f"unknown item {item_id}")
        try:
            decision = pipe.process(item_id)
        except IllegalTransition as exc:
            raise HTTPException(409, str(exc)) from exc
        item = pipe.items[item_id]
        return {"id": item_id, "state": item.state.value, "routing": decision.to_dict()}

    @app.get("/items/{item_id}")
    def get_item(item_id: str, sess: Session = Depends(session)) -> dict:
        require(sess, "operator", "reviewer", "auditor")
        return item_view(pipe, item_id)

    @app.get("/queue")
    def queue(state: str = Query(default="InReview"),
              sess: Session = Depends(session)) -> dict:
        require(sess, "reviewer")
        try:
            wanted = State(state)
        except ValueError as exc:
            raise HTTPException(400, f"unknown state {state!r}") from exc
        now = pipe.clock.now()
        return {
            "items": [
                {
                    "id": i.item_id,
                    "profile": i.profile,
                    "domain": i.domain,
                    "reasons": list(i.escalation_reasons),
                    "high_risk": i.high_risk,
                    "policy_version": i.policy_version,
                    "age_seconds": max(now - i.created_ts, 0.0),
                }
                for i in pipe.queue(wanted)
            ]
        }

    @app.post("/items/{item_id}/decision")
    def decide(item_id: str, req: DecisionRequest,
               sess: Session = Depends(session)) -> dict:
        require(sess, "reviewer")
        item = pipe.items.get(item_id)
        if item is None:
            raise HTTPException(404, f"unknown item {item_id}")
        if req.expected_version is not None and req.expected_version != item.version():
            raise HTTPException(409, "item changed since it was loaded")
        if item.state is not State.InReview:
            raise HTTPException(409, f"item is in {item.state.value}, not InReview")
        _check_text("edited_output", req.edited_output)

        text = req.edited_output if req.edited_output else (
            item.candidate.text if item.candidate else ""
        )
        language = pipe.policy.metrics.language
        try:
            snap = take_snapshot(item.source.text, text, pipe.policy.metrics)
            prefill = auto_prefill(
                segment(text, language), snap,
                glossary_terms=set(pipe.policy.glossary.term_phrases()),
                max_sentence_tokens=pipe.policy.metrics.structural_max_tokens,
                structural_bar=pipe.policy.settings.checklist_structural_bar,
                policy_version=pipe.policy.version,
            )
            checklist = merge_review(
                prefill,
                {dim: (e.status, e.rationale) for dim, e in req.human_entries.items()},
                sess.reviewer_id or "reviewer",
            )
            decision = ReviewDecision(
                item_id=item_id,
                verdict=req.verdict,
                checklist=checklist,
                reviewer_id=sess.reviewer_id or "reviewer",
                rationale=req.rationale,
                edited_output=req.edited_output,
            )
            pipe.decide(decision)
        except NotInReview as exc:
            raise HTTPException(409, str(exc)) from exc
        except (MissingRationale, UnknownDimension, NonCompliantChecklist,
                ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        check = compliance(checklist)
        return {
            "id": item_id,
            "state": item.state.value,
            "compliant": check["compliant"],
            "satisfied_count": check["satisfied_count"],
        }

    @app.get("/kpis")
    def kpis(sess: Session = Depends(session)) -> dict:
        require(sess, "operator", "reviewer", "auditor")
        return {
            "records": [r.to_dict() for r in pipe.kpi_history()],
            "cqi_series": [
                {"item_id": item_id, "cqi": cqi} for item_id, cqi in pipe.cqi_series()
            ],
            "gamma": pipe.policy.kpi.gamma,
        }

    @app.get("/policies")
    def get_policies(sess: Session = Depends(session)) -> dict:
        require(sess, "operator", "auditor")
        return {
            "policy_version": pipe.policy.version,
            "rules_text": print_rules(pipe.policy.rules),
            "rules_version": pipe.policy.rules.version,
            "governance": {
                "sampling_rate": pipe.policy.governance.sampling_rate,
                "high_risk_domains": sorted(pipe.policy.governance.high_risk_domains),
                "mandatory_review_after_release":
                    pipe.policy.governance.mandatory_review_after_release,
            },
            "kpi": {
                "gamma": pipe.policy.kpi.gamma,
                "weights": list(pipe.policy.kpi.weights),
            },
            "constraints": list(pipe.policy.constraints),
        }

    @app.post("/policies")
    def post_policies(req: PolicyRequest, sess: Session = Depends(session)) -> dict:
        require(sess, "operator")
        from ..config import parse_kv
        from ..errors import ConfigError, RuleDslError

        try:
            thresholds = governance = kpi_config = None
            if req.thresholds_text is not None:
                thresholds = ThresholdTable.from_kv(parse_kv(req.thresholds_text))
            if req.governance_text is not None:
                governance = GovernancePolicy.from_kv(parse_kv(req.governance_text))
            if req.kpi_text is not None:
                kpi_config = KpiConfig.from_kv(parse_kv(req.kpi_text))
            if req.rules_text is not None:
                parse_rules(req.rules_text)  # validate before applying
            version = pipe.apply_policy_change(
                rules_text=req.rules_text,
                thresholds=thresholds,
                governance=governance,
                kpi=kpi_config,
                note=req.note,
            )
        except (RuleDslError, ConfigError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        return {"policy_version": version}

    @app.get("/audit/export")
    def audit_export(
        from_seq: int = Query(default=1, alias="from"),
        to_seq: int | None = Query(default=None, alias="to"),
        role: str = Query(default="public"),
        sess: Session = Depends(session),
    ) -> Response:
        require(sess, "operator", "auditor")
        if role not in _ROLE_RANK:
            raise HTTPException(400, f"unknown export role {role!r}")
        if _ROLE_RANK[role] > _ROLE_RANK[sess.role]:
            raise HTTPException(403, f"role {sess.role} may not export the {role} view")
        upper = to_seq if to_seq is not None else len(pipe.log.rows())
        if from_seq < 1 or upper < from_seq:
            raise HTTPException(400, "invalid range")
        try:
            data = pipe.log.export(from_seq, upper, role)
        except RangeEmpty as exc:
            raise HTTPException(404, str(exc)) from exc
        return Response(content=data, media_type="application/x-ndjson")

    return app
