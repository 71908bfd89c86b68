import threading

import pytest

from accessloop.audit import Kind, replay
from accessloop.checklist import ChecklistEntry, ChecklistResult, DIMENSIONS
from accessloop.errors import NonCompliantChecklist, NotInReview
from accessloop.kpi import KpiConfig
from accessloop.ruledsl import parse_rules
from accessloop.workflow import GovernancePolicy, ReviewDecision, State
from tests.conftest import make_pipeline

SHORT_SOURCE = "El trámite requiere una licencia oficial."
# identity keeps fidelity at 1.0 so the composite index clears gamma
CLEAN_CANDIDATE = SHORT_SOURCE
# paraphrase drags fidelity (and the composite index) down
SHORT_CANDIDATE = "El trámite necesita una licencia."


def full_checklist(satisfied=6):
    statuses = ["satisfied"] * satisfied + ["unsatisfied"] * (6 - satisfied)
    return ChecklistResult(tuple(
        (dim, ChecklistEntry(status, "human", "ok"))
        for dim, status in zip(DIMENSIONS, statuses)
    ))


def quiet_pipeline(**overrides):
    """Pipeline whose default route auto-approves clean items."""
    pipe = make_pipeline(**overrides)
    pipe.policy.governance = GovernancePolicy(
        sampling_rate=0.0, rng_seed="0", mandatory_review_after_release=False,
    )
    # external scorer keys present so R2/R3 are determinate
    return pipe


EXTERNALS = {"dsari": 0.9, "samsa": 0.9, "alignscore": 0.95}


def test_clean_item_auto_approves_and_delivers():
    pipe = quiet_pipeline()
    item = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "general",
                       extra_metrics=EXTERNALS)
    decision = pipe.process(item.item_id)
    assert decision.action == "auto_approve"
    assert item.state is State.Delivered
    kinds = [r["kind"] for r in pipe.log.rows()]
    assert kinds == [
        Kind.Submitted.value, Kind.Snapshot.value, Kind.RuleTrace.value,
        Kind.KpiSnapshot.value, Kind.Routing.value, Kind.Delivery.value,
    ]


def test_missing_externals_escalate_as_missing_data():
    pipe = quiet_pipeline()
    item = pipe.submit(SHORT_SOURCE, SHORT_CANDIDATE, "id", "general")
    decision = pipe.process(item.item_id)
    assert decision.action == "escalate"
    assert "missing_data" in decision.reasons
    assert item.state is State.InReview


def test_generation_stub_runs_when_no_candidate():
    pipe = quiet_pipeline()
    item = pipe.submit(SHORT_SOURCE, None, "id", "general", extra_metrics=EXTERNALS)
    assert item.state is State.Submitted
    pipe.process(item.item_id)
    assert item.candidate is not None
    assert item.state in (State.Delivered, State.InReview)
    generated = [r for r in pipe.log.rows()
                 if r["payload"].get("phase") == "candidate_generated"]
    assert len(generated) == 1


def test_review_decision_delivers_with_edits():
    pipe = quiet_pipeline()
    item = pipe.submit(SHORT_SOURCE, SHORT_CANDIDATE, "id", "legal_warning",
                       extra_metrics=EXTERNALS)
    pipe.process(item.item_id)
    assert item.state is State.InReview
    assert "high_risk" in item.escalation_reasons
    pipe.decide(ReviewDecision(
        item.item_id, "approve_with_edits", full_checklist(), "rev-1",
        "tighten wording", edited_output="El trámite exige una licencia oficial.",
    ))
    assert item.state is State.Delivered
    assert item.output.text == "El trámite exige una licencia oficial."
    # edits queue an adaptation pass before delivery
    states = [t.to_state for t in item.history]
    assert State.AdaptationQueued in states


def test_noncompliant_approve_rejected():
    pipe = quiet_pipeline()
    item = pipe.submit(SHORT_SOURCE, SHORT_CANDIDATE, "id", "legal_warning",
                       extra_metrics=EXTERNALS)
    pipe.process(item.item_id)
    with pytest.raises(NonCompliantChecklist):
        pipe.decide(ReviewDecision(item.item_id, "approve", full_checklist(3),
                                   "rev-1", "nope"))
    assert item.state is State.InReview


def test_decide_requires_in_review():
    pipe = quiet_pipeline()
    item = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "general",
                       extra_metrics=EXTERNALS)
    pipe.process(item.item_id)  # auto-approves
    with pytest.raises(NotInReview):
        pipe.decide(ReviewDecision(item.item_id, "approve", full_checklist(),
                                   "rev-1", "late"))


def test_regeneration_loop_and_bound():
    pipe = quiet_pipeline()
    pipe.policy.settings.max_regenerations = 1
    item = pipe.submit(SHORT_SOURCE, SHORT_CANDIDATE, "id", "legal_warning",
                       extra_metrics=EXTERNALS)
    pipe.process(item.item_id)
    for _ in range(3):
        if item.state is not State.InReview:
            break
        pipe.decide(ReviewDecision(item.item_id, "request_regeneration",
                                   full_checklist(0), "rev-1", "regenerate"))
    # high-risk keeps escalating; after the bound the reason is recorded
    assert item.regenerations >= 2
    assert "regeneration_limit" in item.escalation_reasons


def test_policy_update_application_bumps_version_and_audits():
    from accessloop.adaptation import GlossaryAddition, PolicyUpdate

    pipe = quiet_pipeline()
    update = PolicyUpdate(glossary_additions=(
        GlossaryAddition("papeleos", "trámites administrativos", "from edits", (3,)),
    ))
    assert update.version_bump
    old = pipe.policy.version
    new = pipe.apply_policy_change(
        glossary_additions=update.glossary_additions,
        constraints=update.prompt_constraint_deltas,
        note="consolidated review edits",
    )
    assert new == old + 1
    assert any(e.term == "papeleos" for e in pipe.policy.glossary.entries)
    changes = [r for r in pipe.log.rows() if r["kind"] == Kind.PolicyChange.value]
    assert changes and changes[-1]["payload"]["changes"] == ["glossary"]
    # the new glossary entry now drives the terminology metric
    item = pipe.submit(SHORT_SOURCE, "Hay muchos papeleos.", "id", "general",
                       extra_metrics=EXTERNALS)
    pipe.process(item.item_id)
    assert dict(item.snapshot.extra)["glossary_violations"] == 1.0


def test_policy_change_bumps_version_and_audits():
    pipe = quiet_pipeline()
    old = pipe.policy.version
    new = pipe.apply_policy_change(
        rules_text="RULE R9 IF readability_fh < 10 THEN escalate",
        note="tighten",
    )
    assert new == old + 1
    changes = [r for r in pipe.log.rows() if r["kind"] == Kind.PolicyChange.value]
    assert len(changes) == 1
    assert changes[0]["payload"]["new_version"] == new
    assert [r.rule_id for r in pipe.policy.rules.rules] == ["R9"]


def test_policy_version_monotone_in_audit_stream():
    pipe = quiet_pipeline()
    a = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "general",
                    extra_metrics=EXTERNALS)
    pipe.process(a.item_id)
    pipe.apply_policy_change(rules_text="RULE R9 IF readability_fh < 10 THEN escalate")
    b = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "general",
                    extra_metrics=EXTERNALS)
    pipe.process(b.item_id)
    per_item_versions = {}
    for row in pipe.log.rows():
        per_item_versions.setdefault(row["item_id"], []).append(row["policy_version"])
    for versions in per_item_versions.values():
        assert versions == sorted(versions)


def test_mandatory_review_after_release():
    pipe = quiet_pipeline()
    pipe.policy.governance = GovernancePolicy(
        sampling_rate=0.0, rng_seed="0", mandatory_review_after_release=True,
    )
    first = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "general",
                        extra_metrics=EXTERNALS)
    decision = pipe.process(first.item_id)
    assert "policy_release" in decision.reasons
    pipe.decide(ReviewDecision(first.item_id, "approve", full_checklist(),
                               "rev-1", "release reviewed"))
    second = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "general",
                         extra_metrics=EXTERNALS)
    assert pipe.process(second.item_id).action == "auto_approve"


def test_replay_matches_live_states():
    pipe = quiet_pipeline()
    a = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "general",
                    extra_metrics=EXTERNALS)
    pipe.process(a.item_id)
    b = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "legal_warning",
                    extra_metrics=EXTERNALS)
    pipe.process(b.item_id)
    pipe.decide(ReviewDecision(b.item_id, "approve", full_checklist(), "rev-1", "ok"))
    states = replay(pipe.log.rows())
    assert states == {i.item_id: i.state for i in pipe.items.values()}


def test_concurrent_submissions_unique_ids_and_serialized_history():
    pipe = quiet_pipeline()
    ids = []
    lock = threading.Lock()

    def worker():
        item = pipe.submit(SHORT_SOURCE, CLEAN_CANDIDATE, "id", "general",
                           extra_metrics=EXTERNALS)
        pipe.process(item.item_id)
        with lock:
            ids.append(item.item_id)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(ids)) == 8
    assert pipe.log.verify() == len(pipe.log.rows())
    assert replay(pipe.log.rows()) == {i.item_id: i.state for i in pipe.items.values()}


def test_queue_orders_high_risk_first_then_oldest():
    pipe = quiet_pipeline()
    low = pipe.submit(SHORT_SOURCE, SHORT_CANDIDATE, "id", "general")
    pipe.process(low.item_id)  # escalates on missing externals
    high = pipe.submit(SHORT_SOURCE, SHORT_CANDIDATE, "id", "health_dosage",
                       extra_metrics=EXTERNALS)
    pipe.process(high.item_id)
    queue = pipe.queue()
    assert [i.item_id for i in queue] == [high.item_id, low.item_id]
