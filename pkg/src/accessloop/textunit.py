"""Deterministic text segmentation: sentences, tokens, syllables.

The rules here are intentionally simple and frozen by golden tests.
Reproducibility matters more than linguistic perfection: every metric,
checklist entry and rule evaluation downstream inherits exactly this
segmentation, so two runs over the same text always agree.

Segmentation rules
------------------
* Sentences split on runs of ``.``, ``!``, ``?``, ``…`` and on line
  breaks (a wrapped paragraph therefore counts one sentence per line).
* A sentence must contain at least one token; punctuation-only fragments
  are dropped.
* Tokens are maximal runs of word characters, keeping internal hyphens
  and apostrophes (``practicarlas``, ``vis-à-vis``, ``d'un``).
* Structural markers are lines that start a heading (``#``) or a list
  item (``-``, ``*``, ``•``, or a number followed by ``.``/``)``).

Syllable rules are per language:

* Spanish: vowel nuclei with diphthong/triphthong grouping. Unaccented
  weak vowels (``i``, ``u``, ``ü``) glide onto adjacent vowels; accented
  ``í``/``ú`` break the group (hiatus). The silent ``u`` of ``que``/
  ``qui``/``gue``/``gui`` is dropped first.
* English: vowel-group count with a silent final ``e`` correction,
  minimum one per word.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_TOKEN_RE = re.compile(r"[^\W\d_]+(?:['’-][^\W\d_]+)*|\d+(?:[.,]\d+)*", re.UNICODE)
_SENTENCE_SPLIT_RE = re.compile(r"[.!?…]+|[\r\n]+")
_STRUCTURAL_RE = re.compile(r"^\s*(#{1,6}\s|[-*•]\s|\d+[.)]\s)")

LANGUAGES = ("es", "en")


@dataclass(frozen=True)
class TextUnit:
    """A text with its derived sentence/token structure."""

    text: str
    language: str
    sentences: tuple[tuple[str, ...], ...] = field(default_factory=tuple)
    headings_and_lists: int = 0

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(tok for sent in self.sentences for tok in sent)

    @property
    def sentence_count(self) -> int:
        return len(self.sentences)

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def segment(text: str, language: str = "es") -> TextUnit:
    """Split text into sentences of tokens and count structural markers."""
    if language not in LANGUAGES:
        raise ValueError(f"unsupported language {language!r}, expected one of {LANGUAGES}")
    structural = sum(1 for line in text.splitlines() if _STRUCTURAL_RE.match(line))
    sentences: list[tuple[str, ...]] = []
    for piece in _SENTENCE_SPLIT_RE.split(text):
        toks = tokenize(piece)
        if toks:
            sentences.append(tuple(toks))
    return TextUnit(
        text=text,
        language=language,
        sentences=tuple(sentences),
        headings_and_lists=structural,
    )


# ---- syllables ----

_ES_VOWELS = "aeiouáéíóúü"
_ES_WEAK_GLIDING = "iuü"  # unaccented only; í/ú break diphthongs


def _es_drop_silent_u(word: str) -> str:
    # que/qui and gue/gui carry a silent u; güe/güi keep it (as ü).
    return re.sub(r"([qg])u([ei])", r"\1\2", word)


def syllables_es(word: str) -> int:
    """Rule-based Spanish syllable count for one token."""
    w = _es_drop_silent_u(word.lower())
    count = 0
    prev_vowel: str | None = None
    for ch in w:
        if ch in _ES_VOWELS:
            if prev_vowel is None:
                count += 1
            elif prev_vowel not in _ES_WEAK_GLIDING and ch not in _ES_WEAK_GLIDING:
                count += 1  # hiatus: strong-strong or accented-weak pair
            prev_vowel = ch
        else:
            prev_vowel = None
    return max(count, 1)


def syllables_en(word: str) -> int:
    """Heuristic English syllable count for one token."""
    w = re.sub(r"[^a-z]", "", word.lower())
    if not w:
        return 1
    groups = len(re.findall(r"[aeiouy]+", w))
    if w.endswith("e") and not w.endswith(("le", "ee", "ye")) and groups > 1:
        groups -= 1
    return max(groups, 1)


def syllables(word: str, language: str) -> int:
    return syllables_es(word) if language == "es" else syllables_en(word)


def unit_syllables(unit: TextUnit) -> int:
    return sum(syllables(tok, unit.language) for tok in unit.tokens)
