"""Automatic accessibility metrics feeding rules, KPIs and checklist prefill.

Implemented scorers:

* readability: Fernández-Huerta constants for Spanish, Flesch Reading
  Ease constants for English, clamped to [0, 100].
* sari: n-gram add/keep/delete scoring against references (orders 1-4,
  keep and add as F1, delete as precision), plus the unigram fraction of
  source tokens deleted from the output.
* semantic fidelity: pluggable provider. The shipped surrogate is
  content-word overlap F1 over a synonym table, so glossary-approved
  substitutions are not penalized. An HTTP provider covers external
  embedding-based scorers.
* structural clarity: fraction of sentences at or under the token bar.

A missing provider yields a missing key in the snapshot, never a zero:
a fabricated 0.0 fidelity would escalate every item and poison threshold
calibration downstream.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from typing import Protocol

from .config import Value, get_float, get_str
from .errors import EmptyText, NoReferences, ProviderUnavailable
from .glossary import Glossary
from .textunit import TextUnit, segment, unit_syllables

READABILITY_MAX_SCORE = 100.0

# Keys this module can bind for rule evaluation, and keys accepted only
# from external scorers (never computed here).
KNOWN_METRIC_KEYS = frozenset({
    "readability_fh", "semantic_fidelity", "bertscore", "structural_clarity",
    "sari_deletions", "sari_add", "sari_keep", "sari_del", "sari_overall",
    "glossary_violations",
})
EXTERNAL_METRIC_KEYS = frozenset({"dsari", "samsa", "alignscore"})

# score = base - words_coeff * (words/sentence) - syllables_coeff * (syllables/word) * 100
_READABILITY_CONSTANTS = {
    # Fernández-Huerta: 206.84 - 0.60 * syllables-per-100-words - 1.02 * words-per-sentence
    "es": (206.84, 1.02, 0.60),
    # Flesch Reading Ease: 206.835 - 1.015 * words-per-sentence - 84.6 * syllables-per-word
    "en": (206.835, 1.015, 0.846),
}


def readability(unit: TextUnit) -> float:
    """Language-appropriate reading-ease score on the 0-100 scale."""
    if unit.sentence_count == 0:
        raise EmptyText("readability needs at least one sentence")
    base, words_coeff, syll_coeff = _READABILITY_CONSTANTS[unit.language]
    words = unit.token_count
    sents = unit.sentence_count
    sylls = unit_syllables(unit)
    score = base - words_coeff * (words / sents) - syll_coeff * 100.0 * (sylls / words)
    return min(max(score, 0.0), READABILITY_MAX_SCORE)


# ---- SARI ----


@dataclass(frozen=True)
class SariScore:
    add_f1: float
    keep_f1: float
    del_f1: float
    overall: float
    deletions_fraction: float

    def to_dict(self) -> dict[str, float]:
        return {
            "add_f1": self.add_f1,
            "keep_f1": self.keep_f1,
            "del_f1": self.del_f1,
            "overall": self.overall,
            "deletions_fraction": self.deletions_fraction,
        }


def _ngrams(tokens: list[str], n: int) -> list[str]:
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _sari_order(src: list[str], out: list[str], refs: list[list[str]]) -> tuple[float, float, float]:
    """(keep_f1, del_precision, add_f1) for one n-gram order."""
    numref = len(refs)
    s_rep = Counter({g: c * numref for g, c in Counter(src).items()})
    c_rep = Counter({g: c * numref for g, c in Counter(out).items()})
    r_all = Counter(g for ref in refs for g in ref)

    keep_rep = s_rep & c_rep
    keep_good = keep_rep & r_all
    keep_all = s_rep & r_all
    keep_p = sum(keep_good[g] / keep_rep[g] for g in keep_good) / len(keep_rep) if keep_rep else 0.0
    keep_r = sum(keep_good[g] / keep_all[g] for g in keep_good) / len(keep_all) if keep_all else 0.0

    del_rep = s_rep - c_rep
    del_good = del_rep - r_all
    del_p = sum(del_good[g] / del_rep[g] for g in del_good) / len(del_rep) if del_rep else 0.0

    added = set(Counter(out)) - set(Counter(src))
    add_good = added & set(r_all)
    add_all = set(r_all) - set(Counter(src))
    add_p = len(add_good) / len(added) if added else 0.0
    add_r = len(add_good) / len(add_all) if add_all else 0.0

    return _f1(keep_p, keep_r), del_p, _f1(add_p, add_r)


def deletions_fraction(source: TextUnit, output: TextUnit) -> float:
    """Fraction of source unigrams (as a multiset) absent from the output."""
    s = Counter(t.lower() for t in source.tokens)
    o = Counter(t.lower() for t in output.tokens)
    total = sum(s.values())
    if total == 0:
        return 0.0
    return sum((s - o).values()) / total


def sari(source: TextUnit, output: TextUnit, references: list[TextUnit]) -> SariScore:
    """SARI over n-gram orders 1-4, averaged per order then per component.

    References are deduplicated by token sequence first; a repeated
    reference adds no information and must not move the score.
    """
    if not references:
        raise NoReferences("sari needs at least one reference")
    src = [t.lower() for t in source.tokens]
    out = [t.lower() for t in output.tokens]
    refs: list[list[str]] = []
    seen: set[tuple[str, ...]] = set()
    for ref in references:
        toks = [t.lower() for t in ref.tokens]
        if tuple(toks) not in seen:
            seen.add(tuple(toks))
            refs.append(toks)
    keeps, dels, adds = [], [], []
    for n in range(1, 5):
        k, d, a = _sari_order(_ngrams(src, n), _ngrams(out, n), [_ngrams(r, n) for r in refs])
        keeps.append(k)
        dels.append(d)
        adds.append(a)
    keep_f1 = sum(keeps) / 4
    del_f1 = sum(dels) / 4
    add_f1 = sum(adds) / 4
    return SariScore(
        add_f1=add_f1,
        keep_f1=keep_f1,
        del_f1=del_f1,
        overall=(add_f1 + keep_f1 + del_f1) / 3,
        deletions_fraction=deletions_fraction(source, output),
    )


# ---- semantic fidelity ----

_STOPWORDS_ES = frozenset(
    """el la los las un una unos unas lo al del de en a ante bajo con contra desde
    durante entre hacia hasta mediante para por según sin sobre tras y e o u ni
    que como cuando donde mientras si no sí es son está están estás estoy ser
    estar fue fueron era eran he ha han hay hemos sido mi mis tu tus su sus
    nuestro nuestra nos os me te se le les yo tú él ella ello ellos ellas usted
    ustedes nosotros nosotras vosotros vosotras ya más muy también pero sino
    porque pues este esta estos estas ese esa esos esas aquel aquella aquellos
    aquellas esto eso aquello algún alguna algunos algunas varios varias cada
    todo toda todos todas otro otra otros otras poco poca pocos pocas mucho
    mucha muchos muchas tan tanto tanta tantos tantas""".split()
)

_STOPWORDS_EN = frozenset(
    """the a an and or but if of in on at by for with to from as is are was were
    be been being am it its it's this that these those he she they them him her
    his their theirs we you i me my your our us not no nor yes do does did done
    have has had having can could will would shall should may might must than
    then so such very also just only own same too again once here there when
    where why how all any both each few more most other some who whom which
    what while about into through during before after above below up down out
    off over under""".split()
)

STOPWORDS = {"es": _STOPWORDS_ES, "en": _STOPWORDS_EN}


class SynonymTable:
    """Groups of interchangeable phrases, symmetric by construction.

    Each phrase (one or more tokens, matched case-insensitively) maps to
    a stable group id: the lexicographically smallest member.
    """

    def __init__(self, groups: list[list[str]] | None = None):
        self._group_of: dict[str, str] = {}
        self.max_len = 1
        for group in groups or []:
            self.add_group(group)

    @staticmethod
    def _norm(phrase: str) -> str:
        return " ".join(phrase.lower().split())

    def add_group(self, members: list[str]) -> None:
        phrases = {self._norm(m) for m in members if m.strip()}
        # merge with any group already containing a member
        merged = set(phrases)
        for p in phrases:
            gid = self._group_of.get(p)
            if gid is not None:
                merged.update(k for k, v in self._group_of.items() if v == gid)
        canonical = min(merged)
        for p in merged:
            self._group_of[p] = canonical
            self.max_len = max(self.max_len, len(p.split()))

    @classmethod
    def from_pairs(cls, pairs: list[tuple[str, str]]) -> "SynonymTable":
        table = cls()
        for a, b in pairs:
            table.add_group([a, b])
        return table

    @classmethod
    def from_text(cls, text: str) -> "SynonymTable":
        """One group per line, members separated by ``|``."""
        table = cls()
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                table.add_group(line.split("|"))
        return table

    def canonical(self, phrase: str) -> str | None:
        return self._group_of.get(self._norm(phrase))

    def canonicalize(self, tokens: tuple[str, ...] | list[str]) -> list[str]:
        """Map each longest-match phrase to its group id, keep the rest."""
        toks = [t.lower() for t in tokens]
        out: list[str] = []
        i = 0
        while i < len(toks):
            for n in range(min(self.max_len, len(toks) - i), 0, -1):
                gid = self._group_of.get(" ".join(toks[i : i + n]))
                if gid is not None:
                    out.append(gid)
                    i += n
                    break
            else:
                out.append(toks[i])
                i += 1
        return out


class FidelityProvider(Protocol):
    ident: str

    def score(self, source: TextUnit, output: TextUnit) -> float: ...


class SurrogateFidelity:
    """Content-word overlap F1 with synonym-group canonicalization."""

    def __init__(self, synonyms: SynonymTable | None = None, language: str = "es"):
        self.synonyms = synonyms or SynonymTable()
        self.language = language
        self.ident = "surrogate-overlap/1"

    def _content(self, unit: TextUnit) -> Counter:
        stop = STOPWORDS.get(unit.language, _STOPWORDS_ES)
        return Counter(t for t in self.synonyms.canonicalize(unit.tokens) if t not in stop)

    def score(self, source: TextUnit, output: TextUnit) -> float:
        a = self._content(source)
        b = self._content(output)
        total = sum(a.values()) + sum(b.values())
        if total == 0:
            return 1.0
        return 2 * sum((a & b).values()) / total


class HttpFidelity:
    """External scorer behind ``POST url {source, output} -> {score}``."""

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout
        self.ident = f"http:{url}"

    def score(self, source: TextUnit, output: TextUnit) -> float:
        body = json.dumps({"source": source.text, "output": output.text}).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, ValueError, OSError) as exc:
            raise ProviderUnavailable(f"fidelity provider {self.url}: {exc}") from exc
        score = payload.get("score")
        if not isinstance(score, (int, float)) or not 0.0 <= float(score) <= 1.0:
            raise ProviderUnavailable(f"fidelity provider returned bad score: {score!r}")
        return float(score)


# ---- structural clarity ----


def structural_clarity(output: TextUnit, max_tokens: int = 20) -> float:
    """Fraction of sentences at or under the token bar; empty text is 1.0."""
    if output.sentence_count == 0:
        return 1.0
    ok = sum(1 for s in output.sentences if len(s) <= max_tokens)
    return ok / output.sentence_count


# ---- snapshot ----


@dataclass
class MetricConfig:
    language: str = "es"
    fidelity: FidelityProvider | None = None
    structural_max_tokens: int = 20
    synonyms: SynonymTable = field(default_factory=SynonymTable)
    glossary: Glossary | None = None

    def __post_init__(self) -> None:
        if self.fidelity is None:
            self.fidelity = SurrogateFidelity(self.synonyms, self.language)

    @classmethod
    def from_kv(cls, kv: dict[str, Value], *, synonyms: SynonymTable | None = None,
                glossary: Glossary | None = None) -> "MetricConfig":
        language = get_str(kv, "metrics.readability.language", "es")
        provider_kind = get_str(kv, "metrics.fidelity.provider", "surrogate")
        table = synonyms or SynonymTable()
        fidelity: FidelityProvider | None
        if provider_kind == "surrogate":
            fidelity = SurrogateFidelity(table, language)
        elif provider_kind == "http":
            fidelity = HttpFidelity(
                get_str(kv, "metrics.fidelity.url", ""),
                timeout=get_float(kv, "metrics.fidelity.timeout", 10.0),
            )
        elif provider_kind == "none":
            fidelity = _NoFidelity()
        else:
            raise ValueError(f"unknown fidelity provider {provider_kind!r}")
        return cls(
            language=language,
            fidelity=fidelity,
            structural_max_tokens=int(get_float(kv, "metrics.structural.max_tokens", 20)),
            synonyms=table,
            glossary=glossary,
        )


class _NoFidelity:
    ident = "none"

    def score(self, source: TextUnit, output: TextUnit) -> float:
        raise ProviderUnavailable("no fidelity provider configured")


@dataclass(frozen=True)
class MetricSnapshot:
    """Immutable bundle of metric values for one work item."""

    readability: float | None
    semantic_fidelity: float | None
    sari: SariScore | None
    deletions: float
    structural_clarity: float
    extra: tuple[tuple[str, float], ...]
    provider_ids: tuple[tuple[str, str], ...]

    def bindings(self) -> dict[str, float]:
        """Flat metric map for rule evaluation; missing keys stay missing."""
        out: dict[str, float] = {}
        if self.readability is not None:
            out["readability_fh"] = self.readability
        if self.semantic_fidelity is not None:
            out["semantic_fidelity"] = self.semantic_fidelity
            # the configured fidelity provider realizes the bertscore slot
            out["bertscore"] = self.semantic_fidelity
        out["sari_deletions"] = self.deletions
        if self.sari is not None:
            out["sari_add"] = self.sari.add_f1
            out["sari_keep"] = self.sari.keep_f1
            out["sari_del"] = self.sari.del_f1
            out["sari_overall"] = self.sari.overall
        out["structural_clarity"] = self.structural_clarity
        for key, value in self.extra:
            out[key] = value
        return out

    def to_dict(self) -> dict:
        return {
            "readability": self.readability,
            "semantic_fidelity": self.semantic_fidelity,
            "sari": self.sari.to_dict() if self.sari else None,
            "deletions": self.deletions,
            "structural_clarity": self.structural_clarity,
            "extra": dict(self.extra),
            "provider_ids": dict(self.provider_ids),
        }


def snapshot(
    source_text: str,
    output_text: str,
    config: MetricConfig,
    references: list[str] | tuple[str, ...] = (),
    extra: dict[str, float] | None = None,
) -> MetricSnapshot:
    """Compute every configured metric for a source/output pair.

    Unavailable providers leave their key out and note the failure in
    provider_ids. EmptyText is raised only when both texts are empty.
    """
    source = segment(source_text, config.language)
    output = segment(output_text, config.language)
    if source.sentence_count == 0 and output.sentence_count == 0:
        raise EmptyText("both source and output are empty")

    providers: dict[str, str] = {}
    read_score: float | None = None
    if output.sentence_count > 0:
        read_score = readability(output)
        providers["readability"] = "fernandez-huerta/1" if config.language == "es" else "flesch/1"
    else:
        providers["readability"] = "unavailable: empty output"

    fid_score: float | None = None
    assert config.fidelity is not None
    try:
        fid_score = config.fidelity.score(source, output)
        providers["semantic_fidelity"] = config.fidelity.ident
    except ProviderUnavailable as exc:
        providers["semantic_fidelity"] = f"unavailable: {exc}"

    sari_score: SariScore | None = None
    if references:
        sari_score = sari(source, output, [segment(r, config.language) for r in references])
        providers["sari"] = "sari-ngram/1"
    else:
        providers["sari"] = "unavailable: no references"

    extras = dict(extra or {})
    if config.glossary is not None:
        extras["glossary_violations"] = float(len(config.glossary.violations(output.tokens)))
        providers["glossary_violations"] = "glossary-scan/1"

    return MetricSnapshot(
        readability=read_score,
        semantic_fidelity=fid_score,
        sari=sari_score,
        deletions=deletions_fraction(source, output),
        structural_clarity=structural_clarity(output, config.structural_max_tokens),
        extra=tuple(sorted((k.lower(), float(v)) for k, v in extras.items())),
        provider_ids=tuple(sorted(providers.items())),
    )
