import pytest

from accessloop import bundled
from accessloop.audit import AuditLog, MemoryStore
from accessloop.config import parse_kv
from accessloop.kpi import KpiConfig
from accessloop.metrics import MetricConfig
from accessloop.pipeline import CounterClock, Pipeline, PolicyState, WorkflowSettings
from accessloop.ruledsl import ThresholdTable, parse_rules
from accessloop.workflow import GovernancePolicy

LISTING_RULES = bundled.default_rules_text()


@pytest.fixture
def default_ruleset():
    return parse_rules(LISTING_RULES)


@pytest.fixture
def threshold_table():
    table = ThresholdTable()
    table.put("*", "*", "theta_dsari", 0.35, note="calibration fixture")
    table.put("*", "*", "theta_samsa", 0.40, note="calibration fixture")
    return table


def make_policy(**overrides) -> PolicyState:
    kv = parse_kv(bundled.demo_config_text())
    base = dict(
        rules=parse_rules(LISTING_RULES),
        thresholds=ThresholdTable.from_kv(kv),
        governance=GovernancePolicy.from_kv(kv),
        kpi=KpiConfig.from_kv(kv),
        metrics=MetricConfig.from_kv(kv),
        settings=WorkflowSettings.from_kv(kv),
    )
    base.update(overrides)
    return PolicyState(**base)


def make_pipeline(salt="test-salt", **overrides) -> Pipeline:
    return Pipeline(
        make_policy(**overrides),
        log=AuditLog(MemoryStore(salt=salt)),
        clock=CounterClock(),
    )


@pytest.fixture
def pipeline():
    return make_pipeline()
