"""Rule language: parse, lint, resolve and evaluate escalation triggers.

Grammar (keywords case-insensitive, identifiers case-preserving)::

    ruleset := rule+
    rule    := "RULE" id comment? "IF" cond "THEN" action
    cond    := conj ("OR" conj)*
    conj    := atom ("AND" atom)*
    atom    := "(" cond ")" | operand cmp operand
             | key "within" "[" sym "," sym "]"
    operand := term ("+" term)*
    term    := number | key | key "(" id ")" | agg "(" key ("," key)+ ")"
    agg     := "combine" | "min" | "max" | "mean"
    cmp     := ">" | "<" | ">=" | "<=" | "=="
    action  := "Activate HoTL supervision" | "escalate"
             | ("record"|"validate"|"confirm"|"accept") id

``//`` comments run to end of line; the one right after a rule id is
attached to that rule. Whether an identifier is a metric key or a
symbolic threshold is decided by the threshold table at resolve time,
never by spelling.

Evaluation is three-valued: a comparison over a missing key is
indeterminate, AND(false, indeterminate) = false, OR(true,
indeterminate) = true, and indeterminate otherwise propagates. A rule
whose condition is indeterminate is reported with its missing keys and
the configured missing-data action (default escalate) joins the action
list: absent evidence must never auto-approve.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .config import Value
from .errors import (
    DuplicateRuleId,
    InvalidInterval,
    RuleSyntaxError,
    UnresolvedSymbol,
)

_KEYWORDS = frozenset({"rule", "if", "then", "and", "or", "within"})
_AGG_MODES = frozenset({"combine", "min", "max", "mean"})
_ACTION_VERBS = frozenset({"record", "validate", "confirm", "accept"})

ESCALATE_ACTION_TEXT = "Activate HoTL supervision"


# ---- AST ----


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Key:
    name: str
    param: str | None = None

    @property
    def binding_key(self) -> str:
        if self.param is None:
            return self.name.lower()
        return f"{self.name.lower()}({self.param.lower()})"

    def display(self) -> str:
        return self.name if self.param is None else f"{self.name}({self.param})"


@dataclass(frozen=True)
class Agg:
    mode: str
    args: tuple["Num | Key", ...]  # parser emits keys; resolve may inline numbers

    def display(self) -> str:
        parts = ", ".join(
            a.display() if isinstance(a, Key) else f"{a.value:g}" for a in self.args
        )
        return f"{self.mode}({parts})"


@dataclass(frozen=True)
class Sum:
    terms: tuple[Union[Num, Key, Agg], ...]


Operand = Union[Num, Key, Agg, Sum]


@dataclass(frozen=True)
class Cmp:
    lhs: Operand
    op: str
    rhs: Operand


@dataclass(frozen=True)
class Within:
    key: Key
    lo: Union[Num, Key]
    hi: Union[Num, Key]


@dataclass(frozen=True)
class And:
    parts: tuple["Condition", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["Condition", ...]


Condition = Union[Cmp, Within, And, Or]


@dataclass(frozen=True)
class Action:
    kind: str  # escalate | record | validate | confirm | accept
    target: str | None = None

    def display(self) -> str:
        if self.kind == "escalate":
            return ESCALATE_ACTION_TEXT
        return f"{self.kind} {self.target}"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target}


@dataclass(frozen=True)
class Rule:
    rule_id: str
    comment: str | None
    condition: Condition
    action: Action


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    source_text: str
    version: str

    @staticmethod
    def version_of(source_text: str) -> str:
        return hashlib.sha256(source_text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ResolvedRuleSet:
    rules: tuple[Rule, ...]
    source_text: str
    version: str
    profile: str
    domain: str
    provenance: tuple[tuple[str, str, float, str], ...] = ()
    # provenance rows: (rule_id, symbol, value, table entry used)


# ---- lexer ----


@dataclass(frozen=True)
class _Token:
    kind: str  # ident | number | punct | comment | eof
    text: str
    line: int
    col: int


_TOKEN_PATTERNS = [
    ("comment", re.compile(r"//[^\n]*")),
    ("number", re.compile(r"(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+-]?\d+)?")),
    ("ident", re.compile(r"[^\W\d]\w*", re.UNICODE)),
    ("punct", re.compile(r">=|<=|==|[><()\[\],+]")),
]


def _lex(text: str) -> Iterator[_Token]:
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        for kind, pattern in _TOKEN_PATTERNS:
            m = pattern.match(text, i)
            if m:
                yield _Token(kind, m.group(), line, col)
                col += len(m.group())
                i = m.end()
                break
        else:
            raise RuleSyntaxError(f"unexpected character {ch!r}", line, col, ch)
    yield _Token("eof", "", line, col)


# ---- parser ----


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_lex(text))
        self.pos = 0

    def _peek(self, skip_comments: bool = True) -> _Token:
        pos = self.pos
        while skip_comments and self.tokens[pos].kind == "comment":
            pos += 1
        return self.tokens[pos]

    def _next(self, skip_comments: bool = True) -> _Token:
        while skip_comments and self.tokens[self.pos].kind == "comment":
            self.pos += 1
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def _expect_keyword(self, word: str) -> _Token:
        tok = self._next()
        if tok.kind != "ident" or tok.text.lower() != word:
            raise RuleSyntaxError(f"expected {word.upper()!r}", tok.line, tok.col, tok.text)
        return tok

    def _expect_punct(self, text: str) -> _Token:
        tok = self._next()
        if tok.kind != "punct" or tok.text != text:
            raise RuleSyntaxError(f"expected {text!r}", tok.line, tok.col, tok.text)
        return tok

    def _ident(self, what: str = "identifier") -> _Token:
        tok = self._next()
        if tok.kind != "ident" or tok.text.lower() in _KEYWORDS:
            raise RuleSyntaxError(f"expected {what}", tok.line, tok.col, tok.text)
        return tok

    def parse_ruleset(self, source_text: str) -> RuleSet:
        rules: list[Rule] = []
        seen: set[str] = set()
        while True:
            tok = self._peek()
            if tok.kind == "eof":
                break
            rule = self._parse_rule()
            if rule.rule_id in seen:
                raise DuplicateRuleId(rule.rule_id)
            seen.add(rule.rule_id)
            rules.append(rule)
        if not rules:
            raise RuleSyntaxError("expected at least one RULE", 1, 1)
        return RuleSet(tuple(rules), source_text, RuleSet.version_of(source_text))

    def _parse_rule(self) -> Rule:
        self._expect_keyword("rule")
        rid = self._ident("rule id").text
        comment: str | None = None
        if self.tokens[self.pos].kind == "comment":
            comment = self.tokens[self.pos].text[2:].strip()
            self.pos += 1
        self._expect_keyword("if")
        cond = self._parse_cond()
        self._expect_keyword("then")
        action = self._parse_action()
        return Rule(rid, comment, cond, action)

    def _parse_cond(self) -> Condition:
        parts = [self._parse_conj()]
        while self._peek().kind == "ident" and self._peek().text.lower() == "or":
            self._next()
            parts.append(self._parse_conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _parse_conj(self) -> Condition:
        parts = [self._parse_atom()]
        while self._peek().kind == "ident" and self._peek().text.lower() == "and":
            self._next()
            parts.append(self._parse_atom())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _parse_atom(self) -> Condition:
        tok = self._peek()
        if tok.kind == "punct" and tok.text == "(":
            self._next()
            inner = self._parse_cond()
            self._expect_punct(")")
            return inner
        lhs = self._parse_operand()
        nxt = self._peek()
        if nxt.kind == "ident" and nxt.text.lower() == "within":
            if not isinstance(lhs, Key):
                raise RuleSyntaxError("within needs a plain key on the left",
                                      nxt.line, nxt.col, nxt.text)
            self._next()
            self._expect_punct("[")
            lo = self._parse_bound()
            self._expect_punct(",")
            hi = self._parse_bound()
            self._expect_punct("]")
            if isinstance(lo, Num) and isinstance(hi, Num) and lo.value > hi.value:
                raise RuleSyntaxError("interval lower bound above upper bound",
                                      nxt.line, nxt.col, nxt.text)
            return Within(lhs, lo, hi)
        if nxt.kind == "punct" and nxt.text in (">", "<", ">=", "<=", "=="):
            op = self._next().text
            rhs = self._parse_operand()
            return Cmp(lhs, op, rhs)
        raise RuleSyntaxError("expected comparator or WITHIN", nxt.line, nxt.col, nxt.text)

    def _parse_bound(self) -> Union[Num, Key]:
        tok = self._peek()
        if tok.kind == "number":
            self._next()
            return Num(float(tok.text))
        sym = self._ident("interval bound")
        return Key(sym.text)

    def _parse_operand(self) -> Operand:
        terms = [self._parse_term()]
        while self._peek().kind == "punct" and self._peek().text == "+":
            self._next()
            terms.append(self._parse_term())
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def _parse_term(self) -> Union[Num, Key, Agg]:
        tok = self._peek()
        if tok.kind == "number":
            self._next()
            return Num(float(tok.text))
        name = self._ident("operand").text
        nxt = self._peek()
        if nxt.kind == "punct" and nxt.text == "(":
            self._next()
            if name.lower() in _AGG_MODES:
                args = [self._parse_agg_arg()]
                while self._peek().kind == "punct" and self._peek().text == ",":
                    self._next()
                    args.append(self._parse_agg_arg())
                self._expect_punct(")")
                if len(args) < 2:
                    raise RuleSyntaxError(f"{name} needs at least two keys",
                                          nxt.line, nxt.col, nxt.text)
                return Agg(name.lower(), tuple(args))
            param = self._ident("parameter").text
            self._expect_punct(")")
            return Key(name, param)
        return Key(name)

    def _parse_agg_arg(self) -> Key:
        name = self._ident("key").text
        if self._peek().kind == "punct" and self._peek().text == "(":
            self._next()
            param = self._ident("parameter").text
            self._expect_punct(")")
            return Key(name, param)
        return Key(name)

    def _parse_action(self) -> Action:
        tok = self._ident("action")
        word = tok.text.lower()
        if word == "activate":
            self._expect_keyword("hotl")
            self._expect_keyword("supervision")
            return Action("escalate")
        if word == "escalate":
            return Action("escalate")
        if word in _ACTION_VERBS:
            target = self._ident("action target").text
            return Action(word, target)
        raise RuleSyntaxError(f"unknown action {tok.text!r}", tok.line, tok.col, tok.text)


def parse_rules(dsl_text: str) -> RuleSet:
    """Parse rule DSL text into a RuleSet; raises RuleSyntaxError."""
    return _Parser(dsl_text).parse_ruleset(dsl_text)


# ---- pretty printer ----


def _fmt_num(v: float) -> str:
    text = f"{v:g}"
    # %g is the readable form; fall back to repr when it loses precision
    return text if float(text) == v else repr(v)


def _print_operand(node: Operand) -> str:
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Key):
        return node.display()
    if isinstance(node, Agg):
        return node.display()
    return " + ".join(_print_operand(t) for t in node.terms)


def _print_cond(node: Condition, parent: str = "") -> str:
    if isinstance(node, Cmp):
        return f"{_print_operand(node.lhs)} {node.op} {_print_operand(node.rhs)}"
    if isinstance(node, Within):
        lo = _fmt_num(node.lo.value) if isinstance(node.lo, Num) else node.lo.display()
        hi = _fmt_num(node.hi.value) if isinstance(node.hi, Num) else node.hi.display()
        return f"{node.key.display()} within [{lo}, {hi}]"
    if isinstance(node, And):
        body = " AND ".join(_print_cond(p, "and") for p in node.parts)
        return f"({body})" if parent == "and" else body
    body = " OR ".join(_print_cond(p, "or") for p in node.parts)
    return f"({body})" if parent in ("and", "or") else body


def print_rules(rules: RuleSet | ResolvedRuleSet) -> str:
    """Render a ruleset back to DSL text (stable under re-parse)."""
    blocks = []
    for rule in rules.rules:
        head = f"RULE {rule.rule_id}"
        if rule.comment:
            head += f"  // {rule.comment}"
        blocks.append(f"{head}\nIF {_print_cond(rule.condition)}\nTHEN {rule.action.display()}")
    return "\n\n".join(blocks) + "\n"


# ---- threshold table ----


@dataclass
class ThresholdTable:
    """(profile, domain, symbol) -> number with wildcard fallback.

    Lookup tries (profile, domain), then (profile, *), then (*, domain),
    then (*, *). A symbol is "declared" if any entry mentions it.
    """

    entries: dict[tuple[str, str, str], float] = field(default_factory=dict)
    provenance: dict[tuple[str, str, str], str] = field(default_factory=dict)

    def put(self, profile: str, domain: str, symbol: str, value: float, note: str = "") -> None:
        key = (profile.lower(), domain.lower(), symbol.lower())
        self.entries[key] = value
        if note:
            self.provenance[key] = note

    def declares(self, symbol: str) -> bool:
        sym = symbol.lower()
        return any(k[2] == sym for k in self.entries)

    def lookup(self, profile: str, domain: str, symbol: str) -> tuple[float, str] | None:
        sym = symbol.lower()
        for p, d in ((profile.lower(), domain.lower()), (profile.lower(), "*"),
                     ("*", domain.lower()), ("*", "*")):
            hit = self.entries.get((p, d, sym))
            if hit is not None:
                return hit, f"thresholds.{p}.{d}.{sym}"
        return None

    def symbols(self) -> set[str]:
        return {k[2] for k in self.entries}

    @classmethod
    def from_kv(cls, kv: dict[str, Value]) -> "ThresholdTable":
        table = cls()
        for key, value in kv.items():
            if not key.startswith("thresholds."):
                continue
            parts = key.split(".")
            if len(parts) != 4:
                raise ValueError(f"threshold key must be thresholds.<profile>.<domain>.<symbol>: {key}")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"threshold {key} must be a number, got {value!r}")
            table.put(parts[1], parts[2], parts[3], float(value))
        return table


# ---- resolve ----


def resolve(rules: RuleSet | ResolvedRuleSet, table: ThresholdTable,
            profile: str, domain: str) -> ResolvedRuleSet:
    """Replace declared symbols with numbers for one profile/domain."""
    notes: list[tuple[str, str, float, str]] = []

    def subst_key(key: Key, rule_id: str) -> Union[Num, Key]:
        if key.param is not None:
            param = key.param.lower()
            if param == "profile":
                return Key(key.name, profile)
            if param == "domain":
                return Key(key.name, domain)
            return key
        if table.declares(key.name):
            hit = table.lookup(profile, domain, key.name)
            if hit is None:
                raise UnresolvedSymbol(key.name, profile, domain)
            value, entry = hit
            notes.append((rule_id, key.name, value, entry))
            return Num(value)
        return key

    def walk_operand(node: Operand, rule_id: str) -> Operand:
        if isinstance(node, Num):
            return node
        if isinstance(node, Key):
            return subst_key(node, rule_id)
        if isinstance(node, Agg):
            return Agg(
                node.mode,
                tuple(subst_key(a, rule_id) if isinstance(a, Key) else a for a in node.args),
            )
        return Sum(tuple(walk_operand(t, rule_id) for t in node.terms))

    def walk_cond(node: Condition, rule_id: str) -> Condition:
        if isinstance(node, Cmp):
            return Cmp(walk_operand(node.lhs, rule_id), node.op, walk_operand(node.rhs, rule_id))
        if isinstance(node, Within):
            lo = subst_key(node.lo, rule_id) if isinstance(node.lo, Key) else node.lo
            hi = subst_key(node.hi, rule_id) if isinstance(node.hi, Key) else node.hi
            if isinstance(lo, Num) and isinstance(hi, Num) and lo.value > hi.value:
                raise InvalidInterval(
                    f"rule {rule_id}: interval [{lo.value:g}, {hi.value:g}] has lo > hi"
                )
            key = subst_key(node.key, rule_id)
            if isinstance(key, Num):
                raise InvalidInterval(f"rule {rule_id}: within needs a key, got a number")
            return Within(key, lo, hi)
        if isinstance(node, And):
            return And(tuple(walk_cond(p, rule_id) for p in node.parts))
        return Or(tuple(walk_cond(p, rule_id) for p in node.parts))

    new_rules = tuple(
        Rule(r.rule_id, r.comment, walk_cond(r.condition, r.rule_id), r.action)
        for r in rules.rules
    )
    prior = rules.provenance if isinstance(rules, ResolvedRuleSet) else ()
    return ResolvedRuleSet(
        rules=new_rules,
        source_text=rules.source_text,
        version=rules.version,
        profile=profile,
        domain=domain,
        provenance=tuple(prior) + tuple(notes),
    )


# ---- evaluation ----


@dataclass(frozen=True)
class ComparisonTrace:
    lhs_label: str
    lhs_value: float | None
    op: str
    rhs_label: str
    rhs_value: float | None
    verdict: bool | None

    def to_dict(self) -> dict:
        return {
            "lhs_label": self.lhs_label,
            "lhs_value": self.lhs_value,
            "op": self.op,
            "rhs_label": self.rhs_label,
            "rhs_value": self.rhs_value,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class RuleTrace:
    rule_id: str
    verdict: str  # fired | not_fired | indeterminate
    comparisons: tuple[ComparisonTrace, ...]
    rationale: str

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "verdict": self.verdict,
            "comparisons": [c.to_dict() for c in self.comparisons],
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class RuleOutcome:
    fired: tuple[tuple[str, tuple[tuple[str, float], ...]], ...]  # (rule id, bound values)
    not_fired: tuple[str, ...]
    indeterminate: tuple[tuple[str, tuple[str, ...]], ...]  # (rule id, missing keys)
    actions: tuple[Action, ...]
    trace: tuple[RuleTrace, ...]
    escalations: tuple[str, ...] = ()  # fired rule ids whose action escalates
    missing_data_escalation: bool = False
    ruleset_version: str = ""

    @property
    def fired_ids(self) -> tuple[str, ...]:
        return tuple(rid for rid, _ in self.fired)

    def to_dict(self) -> dict:
        return {
            "fired": [{"rule_id": rid, "values": dict(vals)} for rid, vals in self.fired],
            "not_fired": list(self.not_fired),
            "indeterminate": [
                {"rule_id": rid, "missing": list(keys)} for rid, keys in self.indeterminate
            ],
            "actions": [a.to_dict() for a in self.actions],
            "trace": [t.to_dict() for t in self.trace],
            "escalations": list(self.escalations),
            "missing_data_escalation": self.missing_data_escalation,
            "ruleset_version": self.ruleset_version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RuleOutcome":
        return cls(
            fired=tuple(
                (row["rule_id"], tuple(sorted(row["values"].items())))
                for row in data["fired"]
            ),
            not_fired=tuple(data["not_fired"]),
            indeterminate=tuple(
                (row["rule_id"], tuple(row["missing"])) for row in data["indeterminate"]
            ),
            actions=tuple(Action(a["kind"], a.get("target")) for a in data["actions"]),
            trace=tuple(
                RuleTrace(
                    rule_id=t["rule_id"],
                    verdict=t["verdict"],
                    comparisons=tuple(
                        ComparisonTrace(
                            c["lhs_label"], c["lhs_value"], c["op"],
                            c["rhs_label"], c["rhs_value"], c["verdict"],
                        )
                        for c in t["comparisons"]
                    ),
                    rationale=t["rationale"],
                )
                for t in data["trace"]
            ),
            escalations=tuple(data.get("escalations", [])),
            missing_data_escalation=data.get("missing_data_escalation", False),
            ruleset_version=data.get("ruleset_version", ""),
        )


def serialize_trace(outcome: RuleOutcome) -> dict:
    """Structured, JSON-ready form of an outcome; round-trips exactly."""
    return outcome.to_dict()


def deserialize_trace(data: dict) -> RuleOutcome:
    return RuleOutcome.from_dict(data)


_MARKS = {True: "✓", False: "✗", None: "?"}


class _Evaluator:
    def __init__(self, bindings: dict[str, float], combine_mode: str):
        self.bindings = {k.lower(): float(v) for k, v in bindings.items()}
        self.combine_mode = combine_mode
        self.missing: set[str] = set()
        self.used: dict[str, float] = {}
        self.comparisons: list[ComparisonTrace] = []

    def operand(self, node: Operand) -> tuple[float | None, str]:
        if isinstance(node, Num):
            return node.value, _fmt_num(node.value)
        if isinstance(node, Key):
            key = node.binding_key
            if key in self.bindings:
                value = self.bindings[key]
                self.used[key] = value
                return value, f"{node.display()}={_fmt_num(value)}"
            self.missing.add(key)
            return None, f"{node.display()}=?"
        if isinstance(node, Agg):
            values = []
            labels = []
            ok = True
            for arg in node.args:
                v, label = self.operand(arg)
                labels.append(label)
                if v is None:
                    ok = False
                else:
                    values.append(v)
            label = f"{node.mode}({', '.join(labels)})"
            if not ok:
                return None, label
            mode = self.combine_mode if node.mode == "combine" else node.mode
            agg = {"mean": lambda xs: sum(xs) / len(xs), "min": min, "max": max}[mode]
            value = agg(values)
            return value, f"{label}={_fmt_num(value)}"
        total = 0.0
        labels = []
        ok = True
        for term in node.terms:
            v, label = self.operand(term)
            labels.append(label)
            if v is None:
                ok = False
            else:
                total += v
        label = "+".join(labels)
        if not ok:
            return None, label
        return total, f"{label}={_fmt_num(total)}"

    def cond(self, node: Condition) -> tuple[bool | None, str]:
        if isinstance(node, Cmp):
            lv, llabel = self.operand(node.lhs)
            rv, rlabel = self.operand(node.rhs)
            verdict: bool | None
            if lv is None or rv is None:
                verdict = None
            else:
                verdict = {
                    ">": lv > rv, "<": lv < rv, ">=": lv >= rv,
                    "<=": lv <= rv, "==": lv == rv,
                }[node.op]
            self.comparisons.append(ComparisonTrace(llabel, lv, node.op, rlabel, rv, verdict))
            return verdict, f"{llabel} {node.op} {rlabel} {_MARKS[verdict]}"
        if isinstance(node, Within):
            v, vlabel = self.operand(node.key)
            lo, lo_label = self.operand(node.lo)
            hi, hi_label = self.operand(node.hi)
            if v is None or lo is None or hi is None:
                verdict = None
            else:
                verdict = lo <= v <= hi
            self.comparisons.append(
                ComparisonTrace(vlabel, v, "within", f"[{lo_label}, {hi_label}]",
                                None, verdict)
            )
            return verdict, f"{vlabel} within [{lo_label}, {hi_label}] {_MARKS[verdict]}"
        if isinstance(node, And):
            results = [self.cond(p) for p in node.parts]
            texts = [f"({t})" if isinstance(p, Or) else t
                     for p, (_, t) in zip(node.parts, results)]
            values = [v for v, _ in results]
            if any(v is False for v in values):
                verdict = False
            elif any(v is None for v in values):
                verdict = None
            else:
                verdict = True
            return verdict, " AND ".join(texts)
        results = [self.cond(p) for p in node.parts]
        values = [v for v, _ in results]
        if any(v is True for v in values):
            verdict = True
        elif any(v is None for v in values):
            verdict = None
        else:
            verdict = False
        return verdict, " OR ".join(t for _, t in results)


def evaluate(
    rules: RuleSet | ResolvedRuleSet,
    bindings: dict[str, float],
    missing_action: Action | None = Action("escalate"),
    combine_mode: str = "mean",
) -> RuleOutcome:
    """Evaluate every rule against the bindings under three-valued logic."""
    for key, value in bindings.items():
        if not math.isfinite(value):
            raise ValueError(f"binding {key!r} is not finite: {value!r}")
    fired: list[tuple[str, tuple[tuple[str, float], ...]]] = []
    not_fired: list[str] = []
    indeterminate: list[tuple[str, tuple[str, ...]]] = []
    actions: list[Action] = []
    traces: list[RuleTrace] = []
    escalations: list[str] = []

    for rule in rules.rules:
        ev = _Evaluator(bindings, combine_mode)
        verdict, text = ev.cond(rule.condition)
        if verdict is True:
            fired.append((rule.rule_id, tuple(sorted(ev.used.items()))))
            if rule.action.kind == "escalate":
                escalations.append(rule.rule_id)
            if rule.action not in actions:
                actions.append(rule.action)
            suffix = rule.action.display()
            suffix = "ESCALATE" if rule.action.kind == "escalate" else suffix.upper()
            status = "fired"
        elif verdict is False:
            not_fired.append(rule.rule_id)
            suffix = "no action"
            status = "not_fired"
        else:
            missing = tuple(sorted(ev.missing))
            indeterminate.append((rule.rule_id, missing))
            suffix = f"INDETERMINATE (missing: {', '.join(missing)})"
            status = "indeterminate"
        traces.append(
            RuleTrace(
                rule_id=rule.rule_id,
                verdict=status,
                comparisons=tuple(ev.comparisons),
                rationale=f"{rule.rule_id}: {text} → {suffix}",
            )
        )

    missing_escalates = bool(indeterminate) and missing_action is not None \
        and missing_action.kind == "escalate"
    if indeterminate and missing_action is not None and missing_action not in actions:
        actions.append(missing_action)

    return RuleOutcome(
        fired=tuple(fired),
        not_fired=tuple(not_fired),
        indeterminate=tuple(indeterminate),
        actions=tuple(actions),
        trace=tuple(traces),
        escalations=tuple(escalations),
        missing_data_escalation=missing_escalates,
        ruleset_version=rules.version,
    )


# ---- lint ----


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning | info
    code: str
    message: str
    rule_id: str | None = None
    suggestion: str | None = None

    def render(self) -> str:
        where = f" [{self.rule_id}]" if self.rule_id else ""
        hint = f" (did you mean {self.suggestion!r}?)" if self.suggestion else ""
        return f"{self.severity}{where} {self.code}: {self.message}{hint}"


def _edit_distance(a: str, b: str) -> int:
    """Damerau-Levenshtein with adjacent transpositions."""
    if a == b:
        return 0
    prev2: list[int] = []
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        row = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            row[j] = min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == cb:
                row[j] = min(row[j], prev2[j - 2] + 1)
        prev2, prev = prev, row
    return prev[len(b)]


def _suggest(name: str, vocabulary: list[str]) -> str | None:
    limit = max(1, len(name) // 3)
    best = None
    best_d = limit + 1
    for word in vocabulary:
        d = _edit_distance(name, word)
        if d < best_d:
            best, best_d = word, d
    return best


def _condition_keys(node: Condition) -> list[Key]:
    keys: list[Key] = []

    def from_operand(op: Operand) -> None:
        if isinstance(op, Key):
            keys.append(op)
        elif isinstance(op, Agg):
            keys.extend(op.args)
        elif isinstance(op, Sum):
            for term in op.terms:
                from_operand(term)

    def walk(cond: Condition) -> None:
        if isinstance(cond, Cmp):
            from_operand(cond.lhs)
            from_operand(cond.rhs)
        elif isinstance(cond, Within):
            from_operand(cond.key)
            from_operand(cond.lo)
            from_operand(cond.hi)
        else:
            for part in cond.parts:
                walk(part)

    walk(node)
    return keys


def _literal_only(node: Condition) -> bool | None:
    """Evaluate a condition made of literals only, else None."""
    if isinstance(node, Cmp) and isinstance(node.lhs, Num) and isinstance(node.rhs, Num):
        return {
            ">": node.lhs.value > node.rhs.value,
            "<": node.lhs.value < node.rhs.value,
            ">=": node.lhs.value >= node.rhs.value,
            "<=": node.lhs.value <= node.rhs.value,
            "==": node.lhs.value == node.rhs.value,
        }[node.op]
    return None


def lint(
    rules: RuleSet | ResolvedRuleSet,
    known_keys: set[str],
    external_keys: set[str] | None = None,
    symbols: set[str] | None = None,
) -> list[Diagnostic]:
    """Static checks; lint never raises on rule content."""
    known = {k.lower() for k in known_keys}
    external = {k.lower() for k in (external_keys or set())}
    declared = {s.lower() for s in (symbols or set())}
    vocabulary = sorted(known | external | declared)
    diags: list[Diagnostic] = []
    seen_conditions: dict[str, str] = {}

    for rule in rules.rules:
        for key in _condition_keys(rule.condition):
            name = key.name.lower()
            if name in known or name in declared:
                continue
            if name in external:
                diags.append(Diagnostic(
                    "info", "ExternalKey",
                    f"{key.display()} is supplied by an external scorer",
                    rule.rule_id,
                ))
                continue
            diags.append(Diagnostic(
                "warning", "UnknownKey",
                f"unknown key {key.display()}",
                rule.rule_id,
                suggestion=_suggest(name, vocabulary),
            ))

        def walk_literals(cond: Condition) -> None:
            fixed = _literal_only(cond)
            if fixed is True:
                diags.append(Diagnostic("warning", "AlwaysTrue",
                                        f"condition {_print_cond(cond)} is always true",
                                        rule.rule_id))
            elif fixed is False:
                diags.append(Diagnostic("warning", "AlwaysFalse",
                                        f"condition {_print_cond(cond)} is always false",
                                        rule.rule_id))
            if isinstance(cond, (And, Or)):
                for part in cond.parts:
                    walk_literals(part)

        walk_literals(rule.condition)

        canon = _print_cond(rule.condition)
        if canon in seen_conditions:
            diags.append(Diagnostic(
                "warning", "DuplicateCondition",
                f"condition duplicates rule {seen_conditions[canon]}",
                rule.rule_id,
            ))
        else:
            seen_conditions[canon] = rule.rule_id

    return diags
