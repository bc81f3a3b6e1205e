/** Gateway client: documented /v1 REST routes plus the SSE event feed.
 *
 * The feed is consumed over fetch streaming (works in browsers and Node)
 * and resumes from the last delivered id after a disconnect, so no
 * message is lost across reconnects.
 */
import type {
  FeedEntry,
  PlanDecision,
  PlanRevision,
  SessionView,
  TranscriptRecord,
} from "./types.js";

export class GatewayError extends Error {
  constructor(public status: number, detail: string) {
    super(`gateway ${status}: ${detail}`);
  }
}

export interface FeedOptions {
  after?: number;
  maxEvents?: number;
  timeoutMs?: number;
  signal?: AbortSignal;
}

export interface SessionCreateBody {
  agents?: string[];
  budget?: Record<string, unknown> | null;
  plan_mode?: string;
  request_id?: string;
}

type FetchLike = typeof fetch;

export class GatewayClient {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchImpl: FetchLike = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    const headers: Record<string, string> = {};
    if (method !== "GET") {
      headers["Authorization"] = `Bearer ${this.token}`;
      headers["Content-Type"] = "application/json";
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        detail = (JSON.parse(text) as { detail?: string }).detail ?? text;
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new GatewayError(response.status, detail);
    }
    return text ? JSON.parse(text) : null;
  }

  health(): Promise<unknown> {
    return this.request("GET", "/v1/health");
  }

  createSession(body: SessionCreateBody = {}): Promise<SessionView> {
    return this.request("POST", "/v1/sessions", body) as Promise<SessionView>;
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/v1/sessions/${sessionId}`) as
      Promise<SessionView>;
  }

  closeSession(sessionId: string): Promise<SessionView> {
    return this.request("POST", `/v1/sessions/${sessionId}/close`) as
      Promise<SessionView>;
  }

  postUtterance(
    sessionId: string,
    text: string,
    requestId?: string,
  ): Promise<{ stream: string; seq: number }> {
    return this.request("POST", `/v1/sessions/${sessionId}/utterances`, {
      text,
      request_id: requestId,
    }) as Promise<{ stream: string; seq: number }>;
  }

  postEvent(
    sessionId: string,
    event: Record<string, unknown>,
    requestId?: string,
  ): Promise<{ stream: string; seq: number }> {
    return this.request("POST", `/v1/sessions/${sessionId}/events`, {
      event,
      request_id: requestId,
    }) as Promise<{ stream: string; seq: number }>;
  }

  decidePlan(
    sessionId: string,
    planId: string,
    decision: PlanDecision,
    revision?: PlanRevision,
  ): Promise<{ plan: string; decision: string }> {
    return this.request(
      "POST",
      `/v1/sessions/${sessionId}/plans/${planId}/decision`,
      { decision, revision },
    ) as Promise<{ plan: string; decision: string }>;
  }

  decideBudget(
    sessionId: string,
    confirmId: string,
    decision: "approve" | "deny",
  ): Promise<{ confirm_id: string; decision: string }> {
    return this.request(
      "POST",
      `/v1/sessions/${sessionId}/budget/${confirmId}/decision`,
      { decision },
    ) as Promise<{ confirm_id: string; decision: string }>;
  }

  async transcript(sessionId: string): Promise<TranscriptRecord[]> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/sessions/${sessionId}/transcript`,
    );
    if (!response.ok) {
      throw new GatewayError(response.status, await response.text());
    }
    const text = await response.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as TranscriptRecord);
  }

  agents(query?: string, mode: "vector" | "keyword" = "vector"):
    Promise<unknown> {
    const params = query
      ? `?q=${encodeURIComponent(query)}&mode=${mode}`
      : "";
    return this.request("GET", `/v1/registry/agents${params}`);
  }

  sources(query?: string, modality?: string): Promise<unknown> {
    const params = new URLSearchParams();
    if (query) params.set("q", query);
    if (modality) params.set("modality", modality);
    const suffix = params.toString() ? `?${params}` : "";
    return this.request("GET", `/v1/catalog/sources${suffix}`);
  }

  /** One feed pass; ends at maxEvents/timeoutMs (server-bounded). */
  async *feed(
    sessionId: string,
    options: FeedOptions = {},
  ): AsyncGenerator<FeedEntry> {
    const params = new URLSearchParams({ after: String(options.after ?? 0) });
    if (options.maxEvents !== undefined) {
      params.set("max_events", String(options.maxEvents));
    }
    if (options.timeoutMs !== undefined) {
      params.set("timeout_ms", String(options.timeoutMs));
    }
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/sessions/${sessionId}/feed?${params}`,
      { signal: options.signal },
    );
    if (!response.ok || response.body === null) {
      throw new GatewayError(response.status, await response.text());
    }
    yield* parseEventStream(response.body, options.signal);
  }

  /** Long-lived feed with resume: reconnects after drops, continuing from
   * the last delivered id, until the signal aborts. */
  async *liveFeed(
    sessionId: string,
    options: FeedOptions = {},
  ): AsyncGenerator<FeedEntry> {
    let cursor = options.after ?? 0;
    for (;;) {
      if (options.signal?.aborted) return;
      try {
        for await (const entry of this.feed(sessionId, {
          ...options,
          after: cursor,
        })) {
          cursor = entry.id;
          yield entry;
        }
      } catch (error) {
        if (options.signal?.aborted) return;
        if (error instanceof GatewayError && error.status === 404) throw error;
        // transient drop: fall through to reconnect from the cursor
      }
      if (options.maxEvents !== undefined || options.timeoutMs !== undefined) {
        return; // bounded consumption: a completed pass is the end
      }
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }
}

/** Parse server-sent-event frames (id / event / data lines). */
export async function* parseEventStream(
  body: ReadableStream<Uint8Array>,
  signal?: AbortSignal,
): AsyncGenerator<FeedEntry> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      if (signal?.aborted) return;
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let boundary: number;
      while ((boundary = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, boundary);
        buffer = buffer.slice(boundary + 2);
        const entry = parseFrame(frame);
        if (entry) yield entry;
      }
    }
  } finally {
    reader.releaseLock();
  }
}

function parseFrame(frame: string): FeedEntry | null {
  let id: number | null = null;
  let data: string | null = null;
  for (const line of frame.split("\n")) {
    if (line.startsWith("id: ")) id = Number(line.slice(4));
    else if (line.startsWith("data: ")) data = line.slice(6);
  }
  if (id === null || data === null) return null; // keep-alive comment
  return { id, record: JSON.parse(data) as FeedEntry["record"] };
}
