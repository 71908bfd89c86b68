"""Glossary of discouraged terms and their approved substitutes.

File format: UTF-8 tab-separated lines ``term<TAB>substitute<TAB>note``.
The generation stub applies these substitutions, checklist prefill treats
entries as known expansions, and the metric layer counts outputs that
still carry a discouraged term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .textunit import tokenize


@dataclass(frozen=True)
class GlossaryEntry:
    term: str
    substitute: str
    note: str = ""


def _norm(phrase: str) -> str:
    return " ".join(tok.lower() for tok in tokenize(phrase))


@dataclass
class Glossary:
    entries: list[GlossaryEntry] = field(default_factory=list)

    @classmethod
    def from_tsv(cls, text: str) -> "Glossary":
        entries = []
        for raw in text.splitlines():
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                continue
            note = parts[2] if len(parts) > 2 else ""
            entries.append(GlossaryEntry(parts[0].strip(), parts[1].strip(), note.strip()))
        return cls(entries)

    @classmethod
    def load(cls, path: str) -> "Glossary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_tsv(fh.read())

    def to_tsv(self) -> str:
        return "".join(f"{e.term}\t{e.substitute}\t{e.note}\n" for e in self.entries)

    def term_phrases(self) -> dict[str, GlossaryEntry]:
        return {_norm(e.term): e for e in self.entries if e.term.strip()}

    def substitute_phrases(self) -> set[str]:
        return {_norm(e.substitute) for e in self.entries if e.substitute.strip()}

    def violations(self, tokens: tuple[str, ...] | list[str]) -> list[str]:
        """Occurrences of discouraged terms in a token sequence.

        Approved substitutes win over shorter term matches at the same
        position, so ``trámites administrativos`` is never flagged just
        because ``trámites`` alone is a glossary term.
        """
        terms = self.term_phrases()
        substitutes = self.substitute_phrases()
        lengths = sorted(
            {len(p.split()) for p in terms} | {len(p.split()) for p in substitutes},
            reverse=True,
        )
        toks = [t.lower() for t in tokens]
        found: list[str] = []
        i = 0
        while i < len(toks):
            step = 1
            for n in lengths:
                if i + n > len(toks):
                    continue
                phrase = " ".join(toks[i : i + n])
                if phrase in substitutes:
                    step = n
                    break
                if phrase in terms:
                    found.append(phrase)
                    step = n
                    break
            i += step
        return found
