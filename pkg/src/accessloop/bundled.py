"""Access to bundled fixture and default-policy files."""

from __future__ import annotations

import json
from importlib import resources

from .glossary import Glossary
from .kpi import SynonymJudgment, UserSignals
from .metrics import SynonymTable


def read_text(name: str) -> str:
    return resources.files("accessloop.data").joinpath(name).read_text(encoding="utf-8")


def default_rules_text() -> str:
    return read_text("default.eca")


def scenario_rules_text() -> str:
    return read_text("scenario.eca")


def demo_config_text() -> str:
    return read_text("demo.conf")


def scenario_glossary() -> Glossary:
    return Glossary.from_tsv(read_text("scenario_glossary.tsv"))


def scenario_synonyms() -> SynonymTable:
    return SynonymTable.from_text(read_text("scenario_synonyms.txt"))


def judgment_fixture() -> list[SynonymJudgment]:
    rows = [json.loads(line) for line in read_text("signals_judgments.jsonl").splitlines()
            if line.strip()]
    return UserSignals.from_jsonl_records(rows).judgments


def bundled_signals() -> UserSignals:
    rows = [json.loads(line) for line in read_text("signals_judgments.jsonl").splitlines()
            if line.strip()]
    return UserSignals.from_jsonl_records(rows)


def cwi_marks(group: str) -> tuple[frozenset[str], frozenset[str]]:
    """(predicted, gold) word sets for 'older' or 'id'."""
    data = json.loads(read_text(f"cwi_marks_{group}.json"))
    return frozenset(data["predicted"]), frozenset(data["gold"])
