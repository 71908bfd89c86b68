// HTML renderers. Pure functions from data to strings so tests can
// assert on output without a DOM. Labels stay short and each action
// gets its own row, matching the plain-language posture of the domain.

import { flagTerms, wordDiff } from "./diff.js";
import type { GuardResult, ScreenState } from "./guards.js";
import type { ChecklistDto, Dimension, ItemViewDto, QueueItemDto } from "./types.js";
import { DIMENSIONS, DIMENSION_LABELS } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(kind: "error" | "denied" | "empty" | "info",
                             message: string): string {
  return `<div class="banner banner-${kind}" role="status">${escapeHtml(message)}</div>`;
}

const fmtAge = (seconds: number): string => {
  if (seconds < 120) return `${Math.round(seconds)} s`;
  if (seconds < 7200) return `${Math.round(seconds / 60)} min`;
  return `${Math.round(seconds / 3600)} h`;
};

export function renderQueue(items: QueueItemDto[]): string {
  if (items.length === 0) {
    return renderBanner("empty", "No items wait for review.");
  }
  const cards = items.map((item) => {
    const badge = item.high_risk ? '<span class="badge badge-risk">high risk</span>' : "";
    const reasons = item.reasons
      .map((r) => `<span class="reason">${escapeHtml(r)}</span>`)
      .join(" ");
    return `<li class="card" data-item-id="${escapeHtml(item.id)}">
      <a href="#/item/${encodeURIComponent(item.id)}" class="card-title">
        ${escapeHtml(item.id)}</a> ${badge}
      <div class="card-meta">${escapeHtml(item.profile)} · ${escapeHtml(item.domain)}
        · policy v${item.policy_version} · waiting ${fmtAge(item.age_seconds)}</div>
      <div class="card-reasons">${reasons}</div>
    </li>`;
  });
  return `<ul class="queue">${cards.join("\n")}</ul>`;
}

export function renderDiff(source: string, candidate: string,
                           glossaryTerms: string[]): string {
  const flaggedBefore = flagTerms(source, glossaryTerms);
  const flaggedAfter = flagTerms(candidate, glossaryTerms);
  let beforeIndex = 0;
  let afterIndex = 0;
  const html = wordDiff(source, candidate)
    .map((segment) => {
      const words = segment.words.map((word) => {
        const flagged =
          segment.kind === "added"
            ? flaggedAfter.has(afterIndex)
            : flaggedBefore.has(beforeIndex);
        if (segment.kind !== "added") beforeIndex++;
        if (segment.kind !== "removed") afterIndex++;
        const cls = flagged ? ' class="term"' : "";
        return `<span${cls}>${escapeHtml(word)}</span>`;
      });
      const tag = segment.kind === "same" ? "span" : segment.kind === "added" ? "ins" : "del";
      return `<${tag} class="seg-${segment.kind}">${words.join(" ")}</${tag}>`;
    })
    .join(" ");
  return `<div class="diff">${html}</div>`;
}

const fmt = (value: number | null | undefined, digits = 3): string =>
  value === null || value === undefined ? "–" : value.toFixed(digits);

export function renderMetricsPanel(view: ItemViewDto): string {
  const b = view.bindings;
  const sari = view.snapshot?.sari ?? null;
  const rows = [
    ["Readability", fmt(b["readability_fh"] ?? null, 1)],
    ["Fidelity", fmt(b["semantic_fidelity"] ?? null)],
    ["Structure", fmt(b["structural_clarity"] ?? null, 2)],
    ["Deletions", fmt(b["sari_deletions"] ?? null)],
    ["SARI add", fmt(sari ? sari.add_f1 : null)],
    ["SARI keep", fmt(sari ? sari.keep_f1 : null)],
    ["SARI del", fmt(sari ? sari.del_f1 : null)],
    ["CQI", `${fmt(view.cqi)} (gate ${fmt(view.gamma, 2)})`],
  ];
  const cells = rows
    .map(([label, value]) => `<tr><th>${label}</th><td>${value}</td></tr>`)
    .join("");
  return `<table class="metrics">${cells}</table>`;
}

export function renderTracePanel(view: ItemViewDto): string {
  const trace = view.rule_trace?.trace ?? [];
  if (trace.length === 0) return renderBanner("info", "No rule trace yet.");
  const lines = trace
    .map((t) => `<li class="trace-${t.verdict}"><code>${escapeHtml(t.rationale)}</code></li>`)
    .join("\n");
  const reasons = view.escalation_reasons
    .map((r) => `<span class="reason">${escapeHtml(r)}</span>`)
    .join(" ");
  return `<div class="trace"><div class="trace-reasons">${reasons}</div>
    <ul class="trace-lines">${lines}</ul></div>`;
}

function checklistRow(dim: Dimension, prefill: ChecklistDto | undefined,
                      state: ScreenState): string {
  const auto = prefill?.entries[dim];
  const human = state.humanEntries[dim];
  const status = human ? human.status : (auto?.status ?? "unknown");
  const sourceMark = human
    ? '<span class="origin origin-human">you</span>'
    : `<span class="origin origin-auto">auto</span>`;
  const options = (["satisfied", "unsatisfied", "unknown"] as const)
    .map((s) => `<option value="${s}"${s === status ? " selected" : ""}>${s}</option>`)
    .join("");
  const rationale = human ? human.rationale : (auto?.rationale ?? "");
  return `<tr class="check-row" data-dimension="${dim}">
    <th>${DIMENSION_LABELS[dim]} ${sourceMark}</th>
    <td><select class="check-status" data-dimension="${dim}">${options}</select></td>
    <td><input class="check-rationale" data-dimension="${dim}"
         placeholder="why" value="${escapeHtml(rationale)}"
         ${human ? "" : "readonly"}></td>
  </tr>`;
}

export function renderChecklistForm(view: ItemViewDto, state: ScreenState): string {
  const rows = DIMENSIONS.map((dim) =>
    checklistRow(dim, view.checklist_prefill, state)).join("\n");
  return `<table class="checklist">${rows}</table>`;
}

export function renderActionBar(state: ScreenState, guard: GuardResult): string {
  const verdicts = [
    ["approve", "Approve"],
    ["approve_with_edits", "Approve with edits"],
    ["request_regeneration", "Request regeneration"],
  ] as const;
  const rows = verdicts
    .map(([value, label]) => `<label class="action-row">
      <input type="radio" name="verdict" value="${value}"
        ${state.verdict === value ? "checked" : ""}> ${label}</label>`)
    .join("\n");
  const editor =
    state.verdict === "approve_with_edits"
      ? `<textarea id="edited-output" rows="4">${escapeHtml(state.editedOutput)}</textarea>`
      : "";
  const problems = guard.problems
    .map((p) => `<li>${escapeHtml(p)}</li>`)
    .join("");
  return `<div class="actions">
    ${rows}
    ${editor}
    <label class="action-row">Rationale
      <input id="decision-rationale" value="${escapeHtml(state.rationale)}"></label>
    <div class="compliance">Checklist: ${guard.satisfied}/6 satisfied</div>
    <ul class="problems">${problems}</ul>
    <button id="submit-decision" ${guard.submitEnabled ? "" : "disabled"}>
      Send decision</button>
  </div>`;
}

export function renderReviewScreen(view: ItemViewDto, state: ScreenState,
                                   guard: GuardResult): string {
  return `<section class="review" data-item-id="${escapeHtml(view.id)}">
    <h2>${escapeHtml(view.id)} · ${escapeHtml(view.profile)} · ${escapeHtml(view.domain)}
      ${view.high_risk ? '<span class="badge badge-risk">high risk</span>' : ""}</h2>
    <div class="columns">
      <div class="col"><h3>Source</h3><p>${escapeHtml(view.source)}</p></div>
      <div class="col"><h3>Candidate (changes marked)</h3>
        ${renderDiff(view.source, view.candidate ?? "", view.glossary_terms)}</div>
    </div>
    <h3>Scores</h3>${renderMetricsPanel(view)}
    <h3>Why it is here</h3>${renderTracePanel(view)}
    <h3>Checklist</h3>${renderChecklistForm(view, state)}
    <h3>Decision</h3>${renderActionBar(state, guard)}
  </section>`;
}
