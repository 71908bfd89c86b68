// Bootstrap and DOM wiring. All rendering and guard logic lives in the
// pure modules; this file only connects events to state.

import { ApiError, GatewayClient } from "./api.js";
import { buildDecision, evaluateGuards, initialState, ScreenState } from "./guards.js";
import { renderBanner, renderQueue, renderReviewScreen } from "./render.js";
import type { Dimension, ItemViewDto } from "./types.js";

const root = document.getElementById("app") as HTMLElement;

function client(): GatewayClient {
  let token = localStorage.getItem("accessloop-token");
  if (!token) {
    token = window.prompt("Reviewer token") ?? "";
    localStorage.setItem("accessloop-token", token);
  }
  const base = localStorage.getItem("accessloop-base") ?? "";
  return new GatewayClient(base, token);
}

async function showQueue(): Promise<void> {
  try {
    const { items } = await client().loadQueue();
    root.innerHTML = `<h2>Review queue</h2>${renderQueue(items)}`;
  } catch (error) {
    root.innerHTML = renderErr(error);
  }
}

function renderErr(error: unknown): string {
  if (error instanceof ApiError && error.status === 403) {
    return renderBanner("denied", "This token may not review items.");
  }
  const message = error instanceof Error ? error.message : String(error);
  return renderBanner("error", `Could not reach the gateway: ${message}`);
}

async function showItem(id: string): Promise<void> {
  let view: ItemViewDto;
  try {
    view = await client().loadItem(id);
  } catch (error) {
    root.innerHTML = renderErr(error);
    return;
  }
  let state = initialState(view);

  const redraw = () => {
    root.innerHTML = renderReviewScreen(view, state, evaluateGuards(view, state));
    wire();
  };

  const updateEntry = (dim: Dimension, patch: Partial<{ status: string; rationale: string }>) => {
    const prefillEntry = view.checklist_prefill?.entries[dim];
    const current = state.humanEntries[dim] ?? {
      status: prefillEntry?.status ?? "unknown",
      rationale: "",
    };
    state.humanEntries[dim] = {
      status: (patch.status ?? current.status) as never,
      rationale: patch.rationale ?? current.rationale,
    };
  };

  const wire = () => {
    root.querySelectorAll<HTMLSelectElement>(".check-status").forEach((el) => {
      el.onchange = () => {
        updateEntry(el.dataset.dimension as Dimension, { status: el.value });
        redraw();
      };
    });
    root.querySelectorAll<HTMLInputElement>(".check-rationale").forEach((el) => {
      el.onchange = () => {
        updateEntry(el.dataset.dimension as Dimension, { rationale: el.value });
        redraw();
      };
    });
    root.querySelectorAll<HTMLInputElement>("input[name=verdict]").forEach((el) => {
      el.onchange = () => {
        state.verdict = el.value as ScreenState["verdict"];
        redraw();
      };
    });
    const rationale = root.querySelector<HTMLInputElement>("#decision-rationale");
    if (rationale) rationale.onchange = () => {
      state.rationale = rationale.value;
      redraw();
    };
    const edited = root.querySelector<HTMLTextAreaElement>("#edited-output");
    if (edited) edited.onchange = () => {
      state.editedOutput = edited.value;
      redraw();
    };
    const submit = root.querySelector<HTMLButtonElement>("#submit-decision");
    if (submit) submit.onclick = () => void send();
  };

  const send = async () => {
    try {
      await client().submitDecision(view.id, buildDecision(state));
      window.location.hash = "#/queue";
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // someone else moved the item: reload the fresh state
        await showItem(id);
        return;
      }
      root.insertAdjacentHTML("afterbegin", renderErr(error));
    }
  };

  redraw();
}

function route(): void {
  const hash = window.location.hash || "#/queue";
  const itemMatch = /^#\/item\/(.+)$/.exec(hash);
  if (itemMatch) {
    void showItem(decodeURIComponent(itemMatch[1]));
  } else {
    void showQueue();
  }
}

window.addEventListener("hashchange", route);
route();
