// Thin typed client for the gateway. The console computes nothing
// itself: every number it shows comes from these responses.

import type {
  DecisionRequest,
  DecisionResponse,
  ItemViewDto,
  QueueItemDto,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        // body was not JSON; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  loadQueue(state = "InReview"): Promise<{ items: QueueItemDto[] }> {
    return this.request("GET", `/queue?state=${encodeURIComponent(state)}`);
  }

  loadItem(id: string): Promise<ItemViewDto> {
    return this.request("GET", `/items/${encodeURIComponent(id)}`);
  }

  submitDecision(id: string, decision: DecisionRequest): Promise<DecisionResponse> {
    return this.request("POST", `/items/${encodeURIComponent(id)}/decision`, decision);
  }

  health(): Promise<{ status: string; policy_version: number }> {
    return this.request("GET", "/healthz");
  }
}
