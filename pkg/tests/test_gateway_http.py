import json

import pytest
from fastapi.testclient import TestClient

from accessloop.audit import verify_export
from accessloop.gateway.http import Session, create_app
from accessloop.workflow import GovernancePolicy
from accessloop import scenario as scenario_mod

TOKENS = {
    "op-token": Session(role="operator"),
    "rev-token": Session(role="reviewer", reviewer_id="rev-ui"),
    "aud-token": Session(role="auditor"),
}


def auth(token):
    return {"Authorization": f"Bearer {token}"}


@pytest.fixture
def backend():
    pipe = scenario_mod.build_pipeline()
    pipe.policy.governance = GovernancePolicy(
        sampling_rate=0.05, rng_seed="0", mandatory_review_after_release=False,
    )
    return TestClient(create_app(pipe, TOKENS)), pipe


SUBMIT = {
    "source": scenario_mod.SOURCE_TEXT,
    "candidate": scenario_mod.CANDIDATE_TEXT,
    "profile": "id",
    "domain": "public_administration",
    "extra_metrics": scenario_mod.EXTERNAL_SCORES,
}

GOOD_HUMAN_ENTRIES = {
    "lexical_clarity": {"status": "satisfied", "rationale": "register restored"},
    "structural_clarity": {"status": "satisfied", "rationale": "single statement"},
    "relevance": {"status": "satisfied", "rationale": "essentials preserved"},
    "prompt_model_adaptation": {"status": "satisfied", "rationale": "constraint recorded"},
}


def escalate_item(client):
    created = client.post("/items", json=SUBMIT, headers=auth("op-token")).json()
    client.post(f"/items/{created['id']}/process", headers=auth("op-token"))
    return created["id"]


# ---- auth & submission ----

def test_submit_returns_created_generated(backend):
    client, _ = backend
    resp = client.post("/items", json=SUBMIT, headers=auth("op-token"))
    assert resp.status_code == 201
    assert resp.json()["state"] == "Generated"


def test_missing_token_rejected(backend):
    client, _ = backend
    assert client.post("/items", json=SUBMIT).status_code == 403


def test_queue_denied_for_operator(backend):
    client, _ = backend
    assert client.get("/queue", headers=auth("op-token")).status_code == 403


def test_reviewer_cannot_submit(backend):
    client, _ = backend
    assert client.post("/items", json=SUBMIT, headers=auth("rev-token")).status_code == 403


def test_oversize_payload_rejected(backend):
    client, _ = backend
    big = dict(SUBMIT, source="x " * 600_000)
    assert client.post("/items", json=big, headers=auth("op-token")).status_code == 400


def test_empty_source_rejected(backend):
    client, _ = backend
    assert client.post("/items", json=dict(SUBMIT, source="  "),
                       headers=auth("op-token")).status_code == 400


def test_healthz_open(backend):
    client, _ = backend
    assert client.get("/healthz").json()["status"] == "ok"


def test_submit_with_inline_processing(backend):
    client, _ = backend
    resp = client.post("/items", json=dict(SUBMIT, process=True),
                       headers=auth("op-token"))
    assert resp.status_code == 201
    body = resp.json()
    assert body["state"] == "InReview"
    assert "R4" in body["routing"]["reasons"]


# ---- processing, queue, item view ----

def test_process_escalates_scenario_item(backend):
    client, _ = backend
    item_id = escalate_item(client)
    view = client.get(f"/items/{item_id}", headers=auth("rev-token")).json()
    assert view["state"] == "InReview"
    assert "R4" in view["escalation_reasons"]
    rationales = [t["rationale"] for t in view["rule_trace"]["trace"]]
    assert any("R4" in line and "ESCALATE" in line for line in rationales)
    assert view["checklist_prefill"]["entries"]["relevance"]["status"] == "unknown"


def test_queue_lists_escalated_item(backend):
    client, _ = backend
    item_id = escalate_item(client)
    queue = client.get("/queue", headers=auth("rev-token")).json()["items"]
    assert [row["id"] for row in queue] == [item_id]
    assert "R4" in queue[0]["reasons"]


def test_unknown_item_404(backend):
    client, _ = backend
    assert client.get("/items/nope", headers=auth("op-token")).status_code == 404
    assert client.post("/items/nope/process", headers=auth("op-token")).status_code == 404


# ---- decisions ----

def decision_body(**overrides):
    body = {
        "verdict": "approve_with_edits",
        "rationale": "replace colloquial wording",
        "edited_output": scenario_mod.REVISION_TEXT,
        "human_entries": GOOD_HUMAN_ENTRIES,
    }
    body.update(overrides)
    return body


def test_decision_round_trip(backend):
    client, pipe = backend
    item_id = escalate_item(client)
    resp = client.post(f"/items/{item_id}/decision", json=decision_body(),
                       headers=auth("rev-token"))
    assert resp.status_code == 200
    assert resp.json()["state"] == "Delivered"
    assert client.get("/queue", headers=auth("rev-token")).json()["items"] == []
    assert pipe.items[item_id].output.text == scenario_mod.REVISION_TEXT


def test_decision_on_non_in_review_409(backend):
    client, _ = backend
    created = client.post("/items", json=SUBMIT, headers=auth("op-token")).json()
    resp = client.post(f"/items/{created['id']}/decision", json=decision_body(),
                       headers=auth("rev-token"))
    assert resp.status_code == 409


def test_noncompliant_checklist_rejected_server_side(backend):
    client, _ = backend
    item_id = escalate_item(client)
    sparse = {"relevance": {"status": "satisfied", "rationale": "ok"}}
    resp = client.post(
        f"/items/{item_id}/decision",
        json=decision_body(human_entries=sparse, verdict="approve",
                           edited_output=None),
        headers=auth("rev-token"),
    )
    assert resp.status_code == 400
    assert "satisfied" in resp.json()["detail"]


def test_missing_rationale_rejected(backend):
    client, _ = backend
    item_id = escalate_item(client)
    entries = dict(GOOD_HUMAN_ENTRIES,
                   relevance={"status": "satisfied", "rationale": "  "})
    resp = client.post(f"/items/{item_id}/decision",
                       json=decision_body(human_entries=entries),
                       headers=auth("rev-token"))
    assert resp.status_code == 400


def test_stale_version_409_triggers_reload(backend):
    client, _ = backend
    item_id = escalate_item(client)
    resp = client.post(f"/items/{item_id}/decision",
                       json=decision_body(expected_version=1),
                       headers=auth("rev-token"))
    assert resp.status_code == 409


# ---- kpis & policies ----

def test_kpis_endpoint(backend):
    client, _ = backend
    escalate_item(client)
    body = client.get("/kpis", headers=auth("op-token")).json()
    assert body["gamma"] == 0.75
    assert any(r["kpi_id"] == "KPI_2" for r in body["records"])
    assert len(body["cqi_series"]) == 1


def test_policy_get_and_update(backend):
    client, _ = backend
    before = client.get("/policies", headers=auth("op-token")).json()
    resp = client.post(
        "/policies",
        json={"rules_text": "RULE R9 IF readability_fh < 5 THEN escalate",
              "note": "swap rules"},
        headers=auth("op-token"),
    )
    assert resp.status_code == 200
    after = client.get("/policies", headers=auth("op-token")).json()
    assert after["policy_version"] == before["policy_version"] + 1
    assert "R9" in after["rules_text"]


def test_policy_update_validates_rules(backend):
    client, _ = backend
    resp = client.post("/policies", json={"rules_text": "RULE broken IF x >"},
                       headers=auth("op-token"))
    assert resp.status_code == 400


def test_policy_update_rejects_bad_sampling_rate(backend):
    client, _ = backend
    resp = client.post("/policies",
                       json={"governance_text": "governance.sampling_rate = 0.5"},
                       headers=auth("op-token"))
    assert resp.status_code == 400


# ---- audit export ----

def test_auditor_export_verifies(backend):
    client, _ = backend
    escalate_item(client)
    resp = client.get("/audit/export", params={"role": "auditor"},
                      headers=auth("aud-token"))
    assert resp.status_code == 200
    assert verify_export(resp.content) > 0


def test_operator_cannot_take_auditor_view(backend):
    client, _ = backend
    escalate_item(client)
    resp = client.get("/audit/export", params={"role": "auditor"},
                      headers=auth("op-token"))
    assert resp.status_code == 403
    ok = client.get("/audit/export", params={"role": "public"},
                    headers=auth("op-token"))
    assert ok.status_code == 200
    for line in ok.content.decode().splitlines():
        assert "reviewer_id" not in json.loads(line).get("payload", {})


def test_export_empty_range_404(backend):
    client, _ = backend
    escalate_item(client)
    resp = client.get("/audit/export", params={"from": 500, "to": 600},
                      headers=auth("aud-token"))
    assert resp.status_code in (400, 404)


def test_reviewer_cannot_export(backend):
    client, _ = backend
    resp = client.get("/audit/export", headers=auth("rev-token"))
    assert resp.status_code == 403
