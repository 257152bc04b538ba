/**
 * Thin typed client for the clarify-plan HTTP API.
 *
 * The fetch implementation is injectable so tests can replay recorded
 * responses without a network; the browser entry point passes the real
 * `fetch`.
 */

import type {
  AnswerAck,
  AnswerSubmission,
  CreatedSession,
  EventPollResult,
  RapDiffPayload,
  SessionView,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`API request failed with status ${status}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

async function readDetail(response: Response): Promise<unknown> {
  const text = await response.text();
  if (!text) return null;
  try {
    const body = JSON.parse(text) as Record<string, unknown>;
    return "detail" in body ? body.detail : body;
  } catch {
    return text;
  }
}

export class ClarifyPlanApi {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // Bind so callers can hand us a bare `window.fetch`.
    const impl = fetchImpl ?? (globalThis.fetch as FetchLike);
    this.fetchImpl = (url, init) => impl(url, init);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }

  createSession(
    command: string,
    config?: Record<string, unknown>,
  ): Promise<CreatedSession> {
    const body: Record<string, unknown> = { command };
    if (config !== undefined) body.config = config;
    return this.request<CreatedSession>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  postAnswers(sessionId: string, submission: AnswerSubmission): Promise<AnswerAck> {
    return this.request<AnswerAck>(
      `/sessions/${encodeURIComponent(sessionId)}/answers`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(submission),
      },
    );
  }

  getDiff(sessionId: string, fromRev: number, toRev: number): Promise<RapDiffPayload> {
    const id = encodeURIComponent(sessionId);
    return this.request<RapDiffPayload>(
      `/sessions/${id}/rap/diff?from=${fromRev}&to=${toRev}`,
    );
  }

  pollEvents(
    sessionId: string,
    after: number,
    waitSeconds: number,
  ): Promise<EventPollResult> {
    const id = encodeURIComponent(sessionId);
    return this.request<EventPollResult>(
      `/sessions/${id}/events?mode=poll&after=${after}&wait=${waitSeconds}`,
    );
  }

  /** URL for the server-sent-events stream, for EventSource consumers. */
  eventStreamUrl(sessionId: string, after: number): string {
    const id = encodeURIComponent(sessionId);
    return `${this.baseUrl}/sessions/${id}/events?after=${after}`;
  }
}
