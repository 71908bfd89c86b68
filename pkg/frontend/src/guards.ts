// Client-side decision guards. These mirror the server rules so the
// reviewer gets immediate feedback; the server re-checks everything, so
// bypassing this module can never land an invalid decision.

import type {
  ChecklistDto,
  ChecklistStatus,
  DecisionRequest,
  Dimension,
  HumanEntry,
  ItemViewDto,
  Verdict,
} from "./types.js";
import { DIMENSIONS } from "./types.js";

export const COMPLIANCE_MIN_SATISFIED = 4;

export interface ScreenState {
  verdict: Verdict;
  rationale: string;
  humanEntries: Partial<Record<Dimension, HumanEntry>>;
  editedOutput: string;
  itemVersion: number;
}

export function initialState(view: ItemViewDto): ScreenState {
  return {
    verdict: "approve",
    rationale: "",
    humanEntries: {},
    editedOutput: view.candidate ?? "",
    itemVersion: view.version,
  };
}

/** Effective status per dimension: human edits override the prefill. */
export function mergedStatuses(
  prefill: ChecklistDto | undefined,
  humanEntries: Partial<Record<Dimension, HumanEntry>>,
): Record<Dimension, ChecklistStatus> {
  const out = {} as Record<Dimension, ChecklistStatus>;
  for (const dim of DIMENSIONS) {
    const human = humanEntries[dim];
    out[dim] = human ? human.status : (prefill?.entries[dim]?.status ?? "unknown");
  }
  return out;
}

export function satisfiedCount(
  prefill: ChecklistDto | undefined,
  humanEntries: Partial<Record<Dimension, HumanEntry>>,
): number {
  const statuses = mergedStatuses(prefill, humanEntries);
  return DIMENSIONS.filter((dim) => statuses[dim] === "satisfied").length;
}

export interface GuardResult {
  submitEnabled: boolean;
  problems: string[];
  satisfied: number;
  compliant: boolean;
}

export function evaluateGuards(view: ItemViewDto, state: ScreenState): GuardResult {
  const problems: string[] = [];
  const satisfied = satisfiedCount(view.checklist_prefill, state.humanEntries);
  const compliant = satisfied >= COMPLIANCE_MIN_SATISFIED;

  for (const dim of DIMENSIONS) {
    const entry = state.humanEntries[dim];
    if (entry && entry.rationale.trim().length === 0) {
      problems.push(`Add a rationale for ${dim}.`);
    }
  }
  if (state.rationale.trim().length === 0) {
    problems.push("Add a decision rationale.");
  }
  if (state.verdict !== "request_regeneration" && !compliant) {
    problems.push(
      `Checklist has ${satisfied}/6 satisfied; approval needs ${COMPLIANCE_MIN_SATISFIED}.`,
    );
  }
  if (state.verdict === "approve_with_edits") {
    const edited = state.editedOutput.trim();
    if (edited.length === 0) {
      problems.push("Provide the edited output.");
    } else if (edited === (view.candidate ?? "").trim()) {
      problems.push("Edited output must differ from the candidate.");
    }
  }
  return { submitEnabled: problems.length === 0, problems, satisfied, compliant };
}

/** The request body always equals what the screen shows: no hidden fields. */
export function buildDecision(state: ScreenState): DecisionRequest {
  const entries: Record<string, HumanEntry> = {};
  for (const dim of DIMENSIONS) {
    const entry = state.humanEntries[dim];
    if (entry) entries[dim] = { status: entry.status, rationale: entry.rationale };
  }
  return {
    verdict: state.verdict,
    rationale: state.rationale,
    human_entries: entries,
    edited_output: state.verdict === "approve_with_edits" ? state.editedOutput : null,
    expected_version: state.itemVersion,
  };
}
