"""Quality indicators: composite index, per-profile KPIs, study statistics.

The composite quality index (CQI) weights readability, semantic fidelity
and structural clarity. Readability is divided by 100 before weighting so
all three components share the [0, 1] scale; without that the index would
span [0, 40.6] and its decision threshold would be meaningless.

Five KPIs connect pipeline metrics to user-grounded evidence:

* KPI_1 comprehension gain: post score at least baseline + delta.
* KPI_2 synonym acceptance per profile against its threshold.
* KPI_3 glossary activation rate against tau.
* KPI_4 complex-word-identification balance (harmonic mean of precision
  and recall) inside the [alpha, beta] band.
* KPI_5 adaptation accuracy improving on the previous cycle by epsilon.

KPIs whose inputs are absent are omitted, never fabricated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .config import Value, get_float, get_str, section
from .errors import (
    ConfigError,
    DegenerateDistribution,
    EmptyGold,
    LengthMismatch,
    MissingComponent,
    NoData,
)
from .metrics import MetricSnapshot

JUDGMENT_CATEGORIES = ("none", "some", "all")

# Default profile thresholds derive from the observed at-least-one
# acceptance rates per group; the rest are calibration placeholders to be
# revised as evidence accumulates.
DEFAULT_THETA_PROFILE = {"older_adults": 0.834, "id": 0.924}


@dataclass(frozen=True)
class KpiConfig:
    delta: float = 0.1
    theta_profile: tuple[tuple[str, float], ...] = tuple(sorted(DEFAULT_THETA_PROFILE.items()))
    tau: float = 0.5
    alpha: float = 0.5
    beta: float = 0.8
    epsilon: float = 0.02
    gamma: float = 0.75
    weights: tuple[float, float, float] = (0.4, 0.3, 0.3)
    baseline_mode: str = "per_user"  # or "cohort"

    def __post_init__(self) -> None:
        w = self.weights
        if any(x < 0 for x in w) or abs(math.fsum(w) - 1.0) > 1e-9:
            raise ConfigError(f"weights must be nonnegative and sum to 1: {w}")
        if self.alpha > self.beta:
            raise ConfigError(f"alpha must not exceed beta: [{self.alpha}, {self.beta}]")
        for name in ("tau", "gamma", "delta", "epsilon"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]: {v}")
        if self.baseline_mode not in ("per_user", "cohort"):
            raise ConfigError(f"baseline_mode must be per_user or cohort: {self.baseline_mode}")

    def theta_for(self, profile: str) -> float | None:
        for name, value in self.theta_profile:
            if name == profile:
                return value
        return None

    @classmethod
    def from_kv(cls, kv: dict[str, Value]) -> "KpiConfig":
        weights_raw = kv.get("kpi.weights")
        if weights_raw is None:
            weights = (0.4, 0.3, 0.3)
        else:
            if not isinstance(weights_raw, list) or len(weights_raw) != 3:
                raise ConfigError(f"kpi.weights needs three numbers, got {weights_raw!r}")
            weights = tuple(float(x) for x in weights_raw)  # type: ignore[assignment]
        theta = dict(DEFAULT_THETA_PROFILE)
        for key, value in section(kv, "kpi.theta_profile").items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"kpi.theta_profile.{key} must be a number")
            theta[key] = float(value)
        return cls(
            delta=get_float(kv, "kpi.delta", 0.1),
            theta_profile=tuple(sorted(theta.items())),
            tau=get_float(kv, "kpi.tau", 0.5),
            alpha=get_float(kv, "kpi.alpha", 0.5),
            beta=get_float(kv, "kpi.beta", 0.8),
            epsilon=get_float(kv, "kpi.epsilon", 0.02),
            gamma=get_float(kv, "kpi.gamma", 0.75),
            weights=weights,
            baseline_mode=get_str(kv, "kpi.baseline_mode", "per_user"),
        )


def compute_cqi(snapshot: MetricSnapshot, config: KpiConfig) -> float:
    """Weighted composite of readability/100, fidelity and structure."""
    if snapshot.readability is None:
        raise MissingComponent("readability")
    if snapshot.semantic_fidelity is None:
        raise MissingComponent("semantic_fidelity")
    w_read, w_fid, w_struct = config.weights
    return math.fsum([
        w_read * (snapshot.readability / 100.0),
        w_fid * snapshot.semantic_fidelity,
        w_struct * snapshot.structural_clarity,
    ])


# ---- user signals ----


@dataclass(frozen=True)
class SynonymJudgment:
    profile: str
    item_id: str
    judgment: str  # none | some | all

    def __post_init__(self) -> None:
        if self.judgment not in JUDGMENT_CATEGORIES:
            raise ValueError(f"judgment must be one of {JUDGMENT_CATEGORIES}: {self.judgment!r}")


@dataclass(frozen=True)
class ComprehensionScore:
    user: str
    baseline: float
    post: float


@dataclass
class UserSignals:
    comprehension: list[ComprehensionScore] = field(default_factory=list)
    judgments: list[SynonymJudgment] = field(default_factory=list)
    glossary_activations: int = 0
    glossary_opportunities: int = 0
    cwi_predicted: frozenset[str] = frozenset()
    cwi_gold: frozenset[str] = frozenset()
    adaptation_accuracy: list[float] = field(default_factory=list)

    @classmethod
    def from_jsonl_records(cls, records: Iterable[dict]) -> "UserSignals":
        """Fold a stream of kind-discriminated events into one signal set."""
        signals = cls()
        predicted: set[str] = set()
        gold: set[str] = set()
        for rec in records:
            kind = rec.get("kind")
            if kind == "synonym_judgment":
                signals.judgments.append(
                    SynonymJudgment(rec["profile"], rec.get("item_id", ""), rec["judgment"])
                )
            elif kind == "comprehension_score":
                signals.comprehension.append(
                    ComprehensionScore(rec.get("user", ""), float(rec["baseline"]),
                                       float(rec["post"]))
                )
            elif kind == "glossary_activation":
                signals.glossary_opportunities += 1
                if rec.get("activated"):
                    signals.glossary_activations += 1
            elif kind == "cwi_marks":
                predicted.update(rec.get("predicted", []))
                gold.update(rec.get("gold", []))
            elif kind == "adaptation_accuracy":
                signals.adaptation_accuracy.append(float(rec["value"]))
            else:
                raise ValueError(f"unknown signal kind: {kind!r}")
        signals.cwi_predicted = frozenset(predicted)
        signals.cwi_gold = frozenset(gold)
        return signals


def acceptance_rate(
    judgments: list[SynonymJudgment],
    profile: str,
    category: str,
) -> float:
    """Share of a profile's judgments in a category; at_least_one = some + all."""
    if category not in JUDGMENT_CATEGORIES + ("at_least_one",):
        raise ValueError(f"unknown category {category!r}")
    rows = [j for j in judgments if j.profile == profile]
    if not rows:
        raise NoData(profile)
    if category == "at_least_one":
        hits = sum(1 for j in rows if j.judgment in ("some", "all"))
    else:
        hits = sum(1 for j in rows if j.judgment == category)
    return hits / len(rows)


def cwi_scores(predicted: frozenset[str] | set[str],
               gold: frozenset[str] | set[str]) -> tuple[float, float, float]:
    """Set-based precision, recall and F1 for complex-word marks."""
    if not gold:
        raise EmptyGold("recall is undefined without gold marks")
    overlap = len(set(predicted) & set(gold))
    precision = overlap / len(predicted) if predicted else 0.0
    recall = overlap / len(gold)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def cohen_kappa(ann_a: list, ann_b: list) -> float:
    """Chance-corrected agreement between two annotators."""
    if len(ann_a) != len(ann_b):
        raise LengthMismatch(f"{len(ann_a)} vs {len(ann_b)} labels")
    n = len(ann_a)
    if n < 2:
        raise LengthMismatch("need at least two items")
    po = sum(1 for a, b in zip(ann_a, ann_b) if a == b) / n
    labels = set(ann_a) | set(ann_b)
    pe = sum(
        (sum(1 for a in ann_a if a == lab) / n) * (sum(1 for b in ann_b if b == lab) / n)
        for lab in labels
    )
    if abs(pe - 1.0) < 1e-12:
        raise DegenerateDistribution("expected agreement is 1, kappa undefined")
    return (po - pe) / (1 - pe)


# ---- KPI evaluation ----


@dataclass(frozen=True)
class KpiRecord:
    kpi_id: str  # KPI_1 .. KPI_5
    value: float
    satisfied: bool
    inputs: tuple[tuple[str, float], ...]
    profile: str
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kpi_id": self.kpi_id,
            "value": self.value,
            "satisfied": self.satisfied,
            "inputs": dict(self.inputs),
            "profile": self.profile,
            "timestamp": self.timestamp,
        }


def evaluate_kpis(
    signals: UserSignals,
    snapshot: MetricSnapshot | None,
    config: KpiConfig,
    profile: str,
    timestamp: float = 0.0,
) -> list[KpiRecord]:
    """One record per KPI whose inputs are available."""
    records: list[KpiRecord] = []

    if signals.comprehension:
        if config.baseline_mode == "cohort":
            base = sum(c.baseline for c in signals.comprehension) / len(signals.comprehension)
            gains = [c.post - base for c in signals.comprehension]
        else:
            gains = [c.post - c.baseline for c in signals.comprehension]
        gain = sum(gains) / len(gains)
        records.append(KpiRecord(
            "KPI_1", gain, gain >= config.delta,
            inputs=(("delta", config.delta), ("mean_gain", gain),
                    ("users", float(len(gains)))),
            profile=profile, timestamp=timestamp,
        ))

    theta = config.theta_for(profile)
    if theta is not None and any(j.profile == profile for j in signals.judgments):
        rate = acceptance_rate(signals.judgments, profile, "at_least_one")
        records.append(KpiRecord(
            "KPI_2", rate, rate >= theta,
            inputs=(("at_least_one_rate", rate), ("theta_profile", theta)),
            profile=profile, timestamp=timestamp,
        ))

    if signals.glossary_opportunities > 0:
        rate = signals.glossary_activations / signals.glossary_opportunities
        records.append(KpiRecord(
            "KPI_3", rate, rate >= config.tau,
            inputs=(("activations", float(signals.glossary_activations)),
                    ("opportunities", float(signals.glossary_opportunities)),
                    ("tau", config.tau)),
            profile=profile, timestamp=timestamp,
        ))

    if signals.cwi_gold:
        precision, recall, f1 = cwi_scores(signals.cwi_predicted, signals.cwi_gold)
        records.append(KpiRecord(
            "KPI_4", f1, config.alpha <= f1 <= config.beta,
            inputs=(("precision", precision), ("recall", recall),
                    ("alpha", config.alpha), ("beta", config.beta)),
            profile=profile, timestamp=timestamp,
        ))

    if len(signals.adaptation_accuracy) >= 2:
        current = signals.adaptation_accuracy[-1]
        previous = signals.adaptation_accuracy[-2]
        records.append(KpiRecord(
            "KPI_5", current, current >= previous + config.epsilon,
            inputs=(("current", current), ("previous_cycle", previous),
                    ("epsilon", config.epsilon)),
            profile=profile, timestamp=timestamp,
        ))

    return records


KNOWN_KPI_KEYS = frozenset({
    "cqi", "kpi_1", "kpi_2", "kpi_3", "kpi_4", "kpi_5",
    "comprehension_test_score", "baseline", "delta",
    "synonym_acceptance_rate", "theta_profile",
    "glossary_activation_rate", "tau",
    "recall_precision_balance", "alpha", "beta",
    "model_adaptation_accuracy", "previous_cycle", "epsilon", "gamma",
})


def kpi_bindings(records: list[KpiRecord], profile: str) -> dict[str, float]:
    """Flatten KPI records into rule-engine bindings."""
    out: dict[str, float] = {}
    for rec in records:
        out[rec.kpi_id.lower()] = rec.value
        if rec.kpi_id == "KPI_2":
            out[f"synonym_acceptance_rate({profile.lower()})"] = rec.value
        elif rec.kpi_id == "KPI_3":
            out["glossary_activation_rate"] = rec.value
        elif rec.kpi_id == "KPI_4":
            out["recall_precision_balance"] = rec.value
        elif rec.kpi_id == "KPI_5":
            out["model_adaptation_accuracy"] = rec.value
    return out
