/**
 * Live session event feed.
 *
 * Prefers a server-sent-events stream when the environment provides
 * EventSource; otherwise (or after a stream error) falls back to long
 * polling every POLL_INTERVAL_MS. Every delivery path resumes from the
 * last sequence number seen and drops anything at or below it, so a
 * reconnect can never lose or duplicate an event.
 */

import type { EventPollResult, SessionEventPayload } from "./types.js";

export const POLL_INTERVAL_MS = 3000;
const POLL_WAIT_SECONDS = 25;

export interface EventSourceLike {
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike | null;

export interface EventsApi {
  pollEvents(
    sessionId: string,
    after: number,
    waitSeconds: number,
  ): Promise<EventPollResult>;
  eventStreamUrl(sessionId: string, after: number): string;
}

export interface FeedCallbacks {
  onEvent(event: SessionEventPayload): void;
  onFinished(status: string | null): void;
  onError?(error: unknown): void;
}

export interface FeedOptions {
  pollIntervalMs?: number;
  /** Return null to force the polling path (the default outside browsers). */
  eventSourceFactory?: EventSourceFactory;
}

function defaultEventSourceFactory(url: string): EventSourceLike | null {
  const ctor = (globalThis as { EventSource?: new (url: string) => EventSourceLike })
    .EventSource;
  return ctor ? new ctor(url) : null;
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

function finishedStatus(event: SessionEventPayload): string | null | undefined {
  if (event.kind !== "PhaseChanged") return undefined;
  const to = event.payload.to;
  const status = event.payload.status;
  if (to === "Done" && typeof status === "string") return status;
  return undefined;
}

export class EventFeed {
  private readonly api: EventsApi;
  private readonly sessionId: string;
  private readonly pollIntervalMs: number;
  private readonly makeEventSource: EventSourceFactory;
  private stream: EventSourceLike | null = null;
  private stopped = false;

  /** Highest sequence number delivered so far; resume point for reconnects. */
  lastSeq = 0;

  constructor(api: EventsApi, sessionId: string, options: FeedOptions = {}) {
    this.api = api;
    this.sessionId = sessionId;
    this.pollIntervalMs = options.pollIntervalMs ?? POLL_INTERVAL_MS;
    this.makeEventSource = options.eventSourceFactory ?? defaultEventSourceFactory;
  }

  stop(): void {
    this.stopped = true;
    if (this.stream) {
      this.stream.close();
      this.stream = null;
    }
  }

  /** Deliver one event if it is new; returns the final status when it ends the session. */
  private deliver(
    event: SessionEventPayload,
    callbacks: FeedCallbacks,
  ): string | null | undefined {
    if (event.seq <= this.lastSeq) return undefined;
    this.lastSeq = event.seq;
    callbacks.onEvent(event);
    return finishedStatus(event);
  }

  start(callbacks: FeedCallbacks): void {
    this.stopped = false;
    const stream = this.makeEventSource(
      this.api.eventStreamUrl(this.sessionId, this.lastSeq),
    );
    if (stream) {
      this.stream = stream;
      stream.onmessage = (ev) => {
        let event: SessionEventPayload;
        try {
          event = JSON.parse(ev.data) as SessionEventPayload;
        } catch (error) {
          callbacks.onError?.(error);
          return;
        }
        const done = this.deliver(event, callbacks);
        if (done !== undefined) {
          this.stop();
          callbacks.onFinished(done);
        }
      };
      stream.onerror = (error) => {
        if (this.stopped) return;
        callbacks.onError?.(error);
        // The stream broke mid-session: close it and resume by polling
        // from lastSeq so nothing is skipped.
        stream.close();
        this.stream = null;
        void this.pollLoop(callbacks);
      };
    } else {
      void this.pollLoop(callbacks);
    }
  }

  private async pollLoop(callbacks: FeedCallbacks): Promise<void> {
    while (!this.stopped) {
      let result: EventPollResult;
      try {
        result = await this.api.pollEvents(
          this.sessionId,
          this.lastSeq,
          POLL_WAIT_SECONDS,
        );
      } catch (error) {
        callbacks.onError?.(error);
        await delay(this.pollIntervalMs);
        continue;
      }
      for (const event of result.events) {
        this.deliver(event, callbacks);
      }
      if (result.finished) {
        this.stopped = true;
        callbacks.onFinished(result.status);
        return;
      }
      await delay(this.pollIntervalMs);
    }
  }
}
