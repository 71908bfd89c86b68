// DTOs mirroring the gateway JSON payloads.

export type Role = "operator" | "reviewer" | "auditor";

export type ChecklistStatus = "satisfied" | "unsatisfied" | "unknown";

export const DIMENSIONS = [
  "lexical_clarity",
  "syntactic_simplicity",
  "structural_clarity",
  "relevance",
  "multimodal_support",
  "prompt_model_adaptation",
] as const;

export type Dimension = (typeof DIMENSIONS)[number];

export const DIMENSION_LABELS: Record<Dimension, string> = {
  lexical_clarity: "Lexical clarity",
  syntactic_simplicity: "Syntactic simplicity",
  structural_clarity: "Structural clarity",
  relevance: "Relevance",
  multimodal_support: "Multimodal support",
  prompt_model_adaptation: "Prompt/model adaptation",
};

export interface ChecklistEntryDto {
  status: ChecklistStatus;
  source: "auto" | "human";
  rationale: string;
}

export interface ChecklistDto {
  schema_version: string;
  entries: Record<Dimension, ChecklistEntryDto>;
  reviewer_id: string | null;
  policy_version: number;
}

export interface QueueItemDto {
  id: string;
  profile: string;
  domain: string;
  reasons: string[];
  high_risk: boolean;
  policy_version: number;
  age_seconds: number;
}

export interface RuleTraceEntryDto {
  rule_id: string;
  verdict: "fired" | "not_fired" | "indeterminate";
  rationale: string;
}

export interface RuleOutcomeDto {
  fired: { rule_id: string; values: Record<string, number> }[];
  not_fired: string[];
  indeterminate: { rule_id: string; missing: string[] }[];
  trace: RuleTraceEntryDto[];
}

export interface SariDto {
  add_f1: number;
  keep_f1: number;
  del_f1: number;
  overall: number;
  deletions_fraction: number;
}

export interface SnapshotDto {
  readability: number | null;
  semantic_fidelity: number | null;
  sari: SariDto | null;
  deletions: number;
  structural_clarity: number;
  extra: Record<string, number>;
}

export interface ItemViewDto {
  id: string;
  state: string;
  profile: string;
  domain: string;
  high_risk: boolean;
  policy_version: number;
  version: number;
  source: string;
  candidate: string | null;
  edited_output: string | null;
  cqi: number | null;
  gamma: number;
  escalation_reasons: string[];
  snapshot: SnapshotDto | null;
  bindings: Record<string, number>;
  rule_trace: RuleOutcomeDto | null;
  checklist: ChecklistDto | null;
  checklist_prefill?: ChecklistDto;
  glossary_terms: string[];
}

export type Verdict = "approve" | "approve_with_edits" | "request_regeneration";

export interface HumanEntry {
  status: ChecklistStatus;
  rationale: string;
}

export interface DecisionRequest {
  verdict: Verdict;
  rationale: string;
  human_entries: Record<string, HumanEntry>;
  edited_output?: string | null;
  expected_version?: number;
}

export interface DecisionResponse {
  id: string;
  state: string;
  compliant: boolean;
  satisfied_count: number;
}
