// Word-level diff for the side-by-side evidence panel. This is the one
// piece of client-side computation the console performs; everything
// else is fetched.

export type SegmentKind = "same" | "removed" | "added";

export interface DiffSegment {
  kind: SegmentKind;
  words: string[];
}

const splitWords = (text: string): string[] =>
  text.split(/\s+/).filter((w) => w.length > 0);

/** Longest-common-subsequence diff over whitespace-separated words. */
export function wordDiff(before: string, after: string): DiffSegment[] {
  const a = splitWords(before);
  const b = splitWords(after);
  const rows = a.length + 1;
  const cols = b.length + 1;
  const lcs = new Array<number>(rows * cols).fill(0);
  for (let i = a.length - 1; i >= 0; i--) {
    for (let j = b.length - 1; j >= 0; j--) {
      lcs[i * cols + j] =
        a[i] === b[j]
          ? lcs[(i + 1) * cols + j + 1] + 1
          : Math.max(lcs[(i + 1) * cols + j], lcs[i * cols + j + 1]);
    }
  }
  const segments: DiffSegment[] = [];
  const push = (kind: SegmentKind, word: string) => {
    const last = segments[segments.length - 1];
    if (last && last.kind === kind) last.words.push(word);
    else segments.push({ kind, words: [word] });
  };
  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    if (a[i] === b[j]) {
      push("same", a[i]);
      i++;
      j++;
    } else if (lcs[(i + 1) * cols + j] >= lcs[i * cols + j + 1]) {
      push("removed", a[i]);
      i++;
    } else {
      push("added", b[j]);
      j++;
    }
  }
  while (i < a.length) push("removed", a[i++]);
  while (j < b.length) push("added", b[j++]);
  return segments;
}

const normalize = (word: string): string =>
  word.toLowerCase().replace(/[.,;:!?¡¿()[\]«»"']/gu, "");

/**
 * Positions of glossary-flagged terms in a text, for terminology
 * highlights. Multi-word terms match longest-first.
 */
export function flagTerms(text: string, glossaryTerms: string[]): Set<number> {
  const words = splitWords(text).map(normalize);
  const terms = glossaryTerms
    .map((t) => t.toLowerCase().split(/\s+/))
    .sort((x, y) => y.length - x.length);
  const flagged = new Set<number>();
  for (let i = 0; i < words.length; i++) {
    for (const term of terms) {
      if (i + term.length > words.length) continue;
      let match = true;
      for (let k = 0; k < term.length; k++) {
        if (words[i + k] !== term[k]) {
          match = false;
          break;
        }
      }
      if (match) {
        for (let k = 0; k < term.length; k++) flagged.add(i + k);
        i += term.length - 1;
        break;
      }
    }
  }
  return flagged;
}
