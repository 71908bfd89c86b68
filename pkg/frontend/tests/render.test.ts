import { describe, expect, it } from "vitest";

import { evaluateGuards, initialState } from "../src/guards.js";
import {
  renderBanner,
  renderDiff,
  renderQueue,
  renderReviewScreen,
  renderTracePanel,
} from "../src/render.js";
import { ITEM_VIEW } from "./fixtures.js";

describe("renderQueue", () => {
  it("shows an empty state", () => {
    expect(renderQueue([])).toContain("No items wait for review");
  });

  it("renders reasons verbatim and badges high risk", () => {
    const html = renderQueue([
      {
        id: "item-1", profile: "id", domain: "health_dosage",
        reasons: ["R4", "high_risk"], high_risk: true,
        policy_version: 2, age_seconds: 30,
      },
    ]);
    expect(html).toContain(">R4<");
    expect(html).toContain(">high_risk<");
    expect(html).toContain("high risk");
    expect(html).toContain("policy v2");
  });

  it("escapes markup in backend data", () => {
    const html = renderQueue([
      {
        id: "<script>x</script>", profile: "id", domain: "general",
        reasons: [], high_risk: false, policy_version: 1, age_seconds: 1,
      },
    ]);
    expect(html).not.toContain("<script>x");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("renderTracePanel", () => {
  it("renders every rationale line verbatim (escaped)", () => {
    const html = renderTracePanel(ITEM_VIEW);
    for (const entry of ITEM_VIEW.rule_trace!.trace) {
      const escaped = entry.rationale.replace(/</g, "&lt;").replace(/>/g, "&gt;");
      expect(html).toContain(escaped);
    }
  });
});

describe("renderDiff", () => {
  it("marks removals, additions and glossary terms", () => {
    const html = renderDiff(
      "una serie de trámites",
      "una serie de papeleos",
      ["papeleos", "trámites"],
    );
    expect(html).toContain("<del");
    expect(html).toContain("<ins");
    expect(html).toContain('class="term"');
  });
});

describe("renderReviewScreen", () => {
  it("disables the submit button while the checklist is non-compliant", () => {
    const state = initialState(ITEM_VIEW);
    state.rationale = "looks fine";
    const html = renderReviewScreen(ITEM_VIEW, state, evaluateGuards(ITEM_VIEW, state));
    expect(html).toMatch(/<button id="submit-decision" disabled>/);
    expect(html).toContain("1/6 satisfied");
  });

  it("enables the submit button once four dimensions are satisfied", () => {
    const state = initialState(ITEM_VIEW);
    state.rationale = "register restored";
    state.humanEntries = {
      structural_clarity: { status: "satisfied", rationale: "one statement" },
      relevance: { status: "satisfied", rationale: "essentials kept" },
      prompt_model_adaptation: { status: "satisfied", rationale: "recorded" },
    };
    const html = renderReviewScreen(ITEM_VIEW, state, evaluateGuards(ITEM_VIEW, state));
    expect(html).not.toMatch(/<button id="submit-decision" disabled>/);
    expect(html).toContain("4/6 satisfied");
  });

  it("marks prefilled entries as auto and human edits as yours", () => {
    const state = initialState(ITEM_VIEW);
    state.humanEntries = {
      relevance: { status: "satisfied", rationale: "kept" },
    };
    const html = renderReviewScreen(ITEM_VIEW, state, evaluateGuards(ITEM_VIEW, state));
    expect(html).toContain("origin-auto");
    expect(html).toContain("origin-human");
  });

  it("shows metric values and the CQI gate from the payload only", () => {
    const state = initialState(ITEM_VIEW);
    const html = renderReviewScreen(ITEM_VIEW, state, evaluateGuards(ITEM_VIEW, state));
    expect(html).toContain("61.7");
    expect(html).toContain("0.431");
    expect(html).toContain("0.75");
  });
});

describe("renderBanner", () => {
  it("renders the error kinds used for 403/network states", () => {
    expect(renderBanner("denied", "no access")).toContain("banner-denied");
    expect(renderBanner("error", "down")).toContain("banner-error");
  });
});
