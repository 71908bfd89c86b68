"""Acceptance suite: one test per release criterion, stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line
per criterion.
"""

import json
import random
import time
from itertools import product

import pytest

from accessloop import bundled
from accessloop.audit import CorruptLog, replay, verify_export
from accessloop.checklist import (
    COMPLIANCE_MIN_SATISFIED,
    DIMENSIONS,
    ChecklistEntry,
    ChecklistResult,
    compliance,
)
from accessloop.errors import ConfigError
from accessloop.kpi import KpiConfig, acceptance_rate, compute_cqi, cwi_scores
from accessloop.metrics import MetricSnapshot, sari
from accessloop.ruledsl import ThresholdTable, evaluate, parse_rules, resolve
from accessloop.textunit import segment
from accessloop.workflow import (
    Event,
    GovernancePolicy,
    ReviewDecision,
    State,
    TRANSITIONS,
    reachable_with_paths,
    sample_for_review,
)
from tests import test_ruledsl_properties as three_valued
from tests.conftest import make_pipeline
from tests.sari_oracle import oracle_sari


def ok(message: str) -> None:
    print(f"PASS: {message}")


RESOLVED_LISTING = resolve(
    parse_rules(bundled.default_rules_text()),
    ThresholdTable.from_kv({
        "thresholds.*.*.theta_dsari": 0.35,
        "thresholds.*.*.theta_samsa": 0.40,
    }),
    "*", "*",
)


def test_rule_fixtures_exact_outcomes():
    start = time.perf_counter()

    fires_r1 = evaluate(RESOLVED_LISTING, {"readability_fh": 85, "bertscore": 0.80})
    assert fires_r1.fired_ids == ("R1",)

    fires_nothing = evaluate(RESOLVED_LISTING, {"readability_fh": 75, "bertscore": 0.80})
    assert fires_nothing.fired_ids == ()

    fires_r2 = evaluate(RESOLVED_LISTING, {"sari_deletions": 0.45, "alignscore": 0.75})
    assert fires_r2.fired_ids == ("R2",)

    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    ok(f"rule fixtures: exact boolean outcomes in {elapsed * 1000:.0f} ms")


def test_cqi_arithmetic():
    config = KpiConfig()

    def snap(read, fid, struct):
        return MetricSnapshot(readability=read, semantic_fidelity=fid, sari=None,
                              deletions=0.0, structural_clarity=struct,
                              extra=(), provider_ids=())

    assert compute_cqi(snap(100.0, 1.0, 1.0), config) == 1.0  # exact

    rng = random.Random(20260811)
    worst = 0.0
    for _ in range(1000):
        read = rng.uniform(0.0, 100.0)
        fid = rng.uniform(0.0, 1.0)
        struct = rng.uniform(0.0, 1.0)
        got = compute_cqi(snap(read, fid, struct), config)
        expected = 0.4 * (read / 100.0) + 0.3 * fid + 0.3 * struct
        worst = max(worst, abs(got - expected))
    assert worst <= 1e-9
    ok(f"cqi arithmetic: (1,1,1) -> 1.0 exact; 1000 fuzzed within {worst:.2e}")


def test_checklist_two_thirds_exhaustive():
    checked = 0
    for statuses in product(("satisfied", "unsatisfied", "unknown"), repeat=6):
        result = ChecklistResult(tuple(
            (dim, ChecklistEntry(status, "auto", "x"))
            for dim, status in zip(DIMENSIONS, statuses)
        ))
        expected = statuses.count("satisfied") >= COMPLIANCE_MIN_SATISFIED
        assert compliance(result)["compliant"] == expected
        checked += 1
    assert checked == 3 ** 6
    ok(f"checklist rule: compliant iff >=4/6 satisfied over all {checked} assignments")


def test_governance_sampling_band_and_config_gate():
    policy = GovernancePolicy(sampling_rate=0.07, rng_seed="0")
    count = sum(sample_for_review(f"item-{i:05d}", policy) for i in range(10000))
    assert 700 - 77 <= count <= 700 + 77

    with pytest.raises(ConfigError):
        GovernancePolicy.from_kv({"governance.sampling_rate": 0.2})
    with pytest.raises(ConfigError):
        GovernancePolicy.from_kv({"governance.sampling_rate": 0.01})
    ok(f"governance sampling: {count}/10000 drawn at 0.07 (700 +/- 77); "
       "out-of-band rates rejected at load")


def test_table_rates_reproduced():
    judgments = bundled.judgment_fixture()
    expected = {
        ("older_adults", "none"): 0.166,
        ("older_adults", "some"): 0.589,
        ("older_adults", "all"): 0.245,
        ("id", "none"): 0.076,
        ("id", "some"): 0.675,
        ("id", "all"): 0.249,
    }
    for (profile, category), target in expected.items():
        got = acceptance_rate(judgments, profile, category)
        assert got == pytest.approx(target, abs=1e-3), (profile, category, got)
    ok("acceptance rates: bundled judgments reproduce both profiles within 1e-3")


def test_cwi_statistics_reproduced():
    pred_o, gold_o = bundled.cwi_marks("older")
    p, r, _ = cwi_scores(pred_o, gold_o)
    assert p == pytest.approx(0.54, abs=5e-3)
    assert r == pytest.approx(0.73, abs=5e-3)

    pred_i, gold_i = bundled.cwi_marks("id")
    p2, _, f1 = cwi_scores(pred_i, gold_i)
    assert p2 == pytest.approx(0.58, abs=5e-3)
    assert f1 == pytest.approx(0.56, abs=5e-3)
    ok(f"cwi statistics: P={p:.4f}/R={r:.4f} and P={p2:.4f}/F1={f1:.4f} within 5e-3")


def test_sari_matches_bruteforce_oracle_on_200_triples():
    start = time.perf_counter()
    rng = random.Random(4242)
    alphabet = ["el", "la", "de", "caza", "pesca", "norma", "licencia", "y"]
    worst = 0.0
    for _ in range(200):
        src = [rng.choice(alphabet) for _ in range(rng.randint(1, 12))]
        out = [rng.choice(alphabet) for _ in range(rng.randint(0, 12))]
        refs = [[rng.choice(alphabet) for _ in range(rng.randint(1, 12))]
                for _ in range(rng.randint(1, 3))]
        score = sari(
            segment(" ".join(src), "es"),
            segment(" ".join(out), "es"),
            [segment(" ".join(r), "es") for r in refs],
        )
        add, keep, dele, overall = oracle_sari(src, out, refs)
        for got, expected in [(score.add_f1, add), (score.keep_f1, keep),
                              (score.del_f1, dele), (score.overall, overall)]:
            worst = max(worst, abs(got - expected))
            assert abs(got - expected) <= 1e-6
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    ok(f"sari oracle equivalence: 200 triples, worst gap {worst:.2e}, "
       f"{elapsed:.2f} s")


def test_transition_model_check():
    start = time.perf_counter()
    review_edge = (State.InReview, Event.ReviewRecorded, State.Approved)
    assert review_edge in TRANSITIONS
    # high-risk items cannot reach Delivered if the review edge is removed
    assert State.Delivered not in reachable_with_paths(
        high_risk=True, exclude=frozenset({review_edge})
    )
    # with it, delivery is reachable for both risk classes
    assert State.Delivered in reachable_with_paths(high_risk=True)
    assert State.Delivered in reachable_with_paths(high_risk=False)
    # and low-risk items do not depend on the review edge (auto-approve path)
    assert State.Delivered in reachable_with_paths(
        high_risk=False, exclude=frozenset({review_edge})
    )
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    ok(f"transition model check: review edge load-bearing for high risk, "
       f"{elapsed * 1000:.1f} ms")


WORDS = ["el", "trámite", "requiere", "una", "licencia", "oficial", "normas",
         "especiales", "caza", "pesca", "documentos", "papeleos"]


def _random_run(rng: random.Random):
    pipe = make_pipeline(salt=f"run-{rng.randrange(1 << 30)}")
    pipe.policy.governance = GovernancePolicy(
        sampling_rate=0.07, rng_seed=str(rng.randrange(100)),
        mandatory_review_after_release=False,
    )
    for _ in range(rng.randint(1, 3)):
        source = " ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 10))) + "."
        candidate = (source if rng.random() < 0.5 else
                     " ".join(rng.choice(WORDS) for _ in range(rng.randint(2, 10))) + ".")
        extra = ({"dsari": 0.9, "samsa": 0.9, "alignscore": 0.95}
                 if rng.random() < 0.7 else None)
        domain = rng.choice(["general", "news", "legal_warning"])
        item = pipe.submit(source, candidate, rng.choice(["id", "older_adults"]),
                           domain, extra_metrics=extra)
        pipe.process(item.item_id)
        if item.state is State.InReview and rng.random() < 0.8:
            checklist = ChecklistResult(tuple(
                (dim, ChecklistEntry("satisfied", "human", "ok"))
                for dim in DIMENSIONS
            ))
            verdict = rng.choice(["approve", "approve_with_edits"])
            edited = candidate + " Texto revisado." if verdict == "approve_with_edits" else None
            pipe.decide(ReviewDecision(item.item_id, verdict, checklist,
                                       "rev-x", "randomized check",
                                       edited_output=edited))
    return pipe


def test_audit_replay_randomized_runs_and_tamper():
    rng = random.Random(20260811)
    last_export = b""
    for _ in range(1000):
        pipe = _random_run(rng)
        live = {i.item_id: i.state for i in pipe.items.values()}
        assert replay(pipe.log.rows()) == live
        last_export = pipe.log.export(1, len(pipe.log.rows()), "auditor")
    assert verify_export(last_export) > 0
    for _ in range(50):
        tampered = bytearray(last_export)
        pos = rng.randrange(len(tampered))
        bit = 1 << rng.randrange(8)
        if tampered[pos] ^ bit == tampered[pos]:
            continue
        tampered[pos] ^= bit
        with pytest.raises(CorruptLog):
            verify_export(bytes(tampered))
    ok("audit replay: 1000 randomized runs replay to identical states; "
       "single-byte tampers detected")


def test_end_to_end_scenario_cli():
    import io
    from contextlib import redirect_stdout

    from accessloop.gateway.cli import main
    from accessloop.scenario import run_scenario

    start = time.perf_counter()
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main(["scenario", "appendix-a"])
    output = buffer.getvalue()
    assert code == 0
    assert "routing: escalate" in output
    assert "R4" in output  # terminology/register path
    assert "state: Delivered" in output
    assert "preference pairs exported: 1" in output
    assert output.count("glossary-addition candidate:") == 1

    result = run_scenario()
    assert result.final_state is State.Delivered
    assert "R4" in result.escalation_reasons
    assert len(result.preference_pairs) == 1
    assert result.preference_pairs[0].chosen != result.preference_pairs[0].rejected
    assert len(result.policy_update.glossary_additions) == 1
    assert "papeleos" in result.policy_update.glossary_additions[0].term
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    ok(f"end-to-end scenario: escalate -> review -> deliver -> export in "
       f"{elapsed:.2f} s")


def test_three_valued_semantics_against_truth_table():
    checked = 0
    for bindings in three_valued.all_binding_assignments():
        verdicts = three_valued.engine_verdicts(bindings)
        for rule_id in three_valued.ATOMS:
            assert verdicts[rule_id] == three_valued.oracle_verdict(rule_id, bindings)
        checked += 1
    ok(f"three-valued semantics: {checked} binding assignments match the "
       "truth-table oracle exactly")
