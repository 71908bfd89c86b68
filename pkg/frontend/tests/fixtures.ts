import type { ChecklistDto, ItemViewDto } from "../src/types.js";

export const PREFILL: ChecklistDto = {
  schema_version: "1.0",
  entries: {
    lexical_clarity: { status: "satisfied", source: "auto", rationale: "no acronyms" },
    syntactic_simplicity: { status: "unsatisfied", source: "auto", rationale: "22 tokens" },
    structural_clarity: { status: "unsatisfied", source: "auto", rationale: "below bar" },
    relevance: { status: "unknown", source: "auto", rationale: "needs human judgment" },
    multimodal_support: { status: "unknown", source: "auto", rationale: "needs human judgment" },
    prompt_model_adaptation: { status: "unknown", source: "auto", rationale: "needs human judgment" },
  },
  reviewer_id: null,
  policy_version: 1,
};

export const ITEM_VIEW: ItemViewDto = {
  id: "item-000001",
  state: "InReview",
  profile: "id",
  domain: "public_administration",
  high_risk: false,
  policy_version: 1,
  version: 7,
  source: "Requieren una serie de trámites, entre ellos la obtención de licencia.",
  candidate: "Requieren una serie de papeleos.",
  edited_output: null,
  cqi: 0.431,
  gamma: 0.75,
  escalation_reasons: ["R4", "cqi_below_gamma"],
  snapshot: {
    readability: 61.7,
    semantic_fidelity: 0.615,
    sari: null,
    deletions: 0.4,
    structural_clarity: 0.0,
    extra: { glossary_violations: 1 },
  },
  bindings: {
    readability_fh: 61.7,
    semantic_fidelity: 0.615,
    structural_clarity: 0.0,
    sari_deletions: 0.4,
    glossary_violations: 1,
  },
  rule_trace: {
    fired: [{ rule_id: "R4", values: { glossary_violations: 1 } }],
    not_fired: ["R1", "R2", "R3"],
    indeterminate: [],
    trace: [
      { rule_id: "R1", verdict: "not_fired", rationale: "R1: Readability_FH=61.7 > 80 ✗ AND BERTScore=0.615 < 0.85 ✓ → no action" },
      { rule_id: "R4", verdict: "fired", rationale: "R4: glossary_violations=1 > 0 ✓ → ESCALATE" },
    ],
  },
  checklist: null,
  checklist_prefill: PREFILL,
  glossary_terms: ["papeleos", "trámites"],
};
