"""Exception types shared across the pipeline modules."""

from __future__ import annotations


class AccessLoopError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(AccessLoopError):
    """Malformed or out-of-range configuration."""


# ---- metrics ----

class EmptyText(AccessLoopError):
    """Operation requires at least one sentence."""


class NoReferences(AccessLoopError):
    """SARI needs a non-empty reference list."""


class ProviderUnavailable(AccessLoopError):
    """A metric provider could not produce a score.

    Callers must treat the metric as missing, never as zero.
    """


# ---- rule DSL ----

class RuleDslError(AccessLoopError):
    """Base class for rule language errors."""


class RuleSyntaxError(RuleDslError):
    def __init__(self, message: str, line: int, column: int, token: str = ""):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column
        self.token = token


class DuplicateRuleId(RuleDslError):
    def __init__(self, rule_id: str):
        super().__init__(f"duplicate rule id: {rule_id}")
        self.rule_id = rule_id


class UnresolvedSymbol(RuleDslError):
    def __init__(self, symbol: str, profile: str, domain: str):
        super().__init__(
            f"no threshold entry for symbol {symbol!r} under profile={profile!r} domain={domain!r}"
        )
        self.symbol = symbol
        self.profile = profile
        self.domain = domain


class InvalidInterval(RuleDslError):
    """A within-interval resolved with lower bound above upper bound."""


# ---- kpi ----

class MissingComponent(AccessLoopError):
    def __init__(self, name: str):
        super().__init__(f"composite index needs component {name!r}")
        self.name = name


class NoData(AccessLoopError):
    def __init__(self, profile: str):
        super().__init__(f"no judgments recorded for profile {profile!r}")
        self.profile = profile


class EmptyGold(AccessLoopError):
    """Recall is undefined for an empty gold set."""


class LengthMismatch(AccessLoopError):
    """Annotation sequences must be the same length."""


class DegenerateDistribution(AccessLoopError):
    """Expected agreement is 1, so kappa is undefined."""


# ---- checklist ----

class MissingRationale(AccessLoopError):
    def __init__(self, dimension: str):
        super().__init__(f"human entry for {dimension!r} needs a non-empty rationale")
        self.dimension = dimension


class UnknownDimension(AccessLoopError):
    def __init__(self, dimension: str):
        super().__init__(f"unknown checklist dimension: {dimension!r}")
        self.dimension = dimension


# ---- workflow ----

class EmptySource(AccessLoopError):
    """Submissions must carry a non-empty source text."""


class IllegalTransition(AccessLoopError):
    def __init__(self, state: str, event: str, target: str | None = None):
        detail = f"{state} + {event}"
        if target is not None:
            detail += f" -> {target}"
        super().__init__(f"illegal transition: {detail}")
        self.state = state
        self.event = event
        self.target = target


class NotInReview(AccessLoopError):
    """Decisions may only be recorded for items in review."""


class NonCompliantChecklist(AccessLoopError):
    """Approval requires a compliant checklist."""


# ---- audit ----

class StorageFailure(AccessLoopError):
    """Durable append failed; the caller must not proceed."""


class CorruptLog(AccessLoopError):
    def __init__(self, seq: int, reason: str):
        super().__init__(f"corrupt log at seq {seq}: {reason}")
        self.seq = seq
        self.reason = reason


class DivergentState(AccessLoopError):
    def __init__(self, seq: int, reason: str):
        super().__init__(f"replay diverged at seq {seq}: {reason}")
        self.seq = seq
        self.reason = reason


class LegalHold(AccessLoopError):
    """Item is under legal hold and may not be redacted."""


class RangeEmpty(AccessLoopError):
    """Export range contains no events."""


# ---- adaptation ----

class InsufficientData(AccessLoopError):
    def __init__(self, profile: str, have: int, need: int):
        super().__init__(f"{have} observations for {profile!r}, need {need}")
        self.profile = profile
        self.have = have
        self.need = need
