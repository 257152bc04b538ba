import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

/** Load a recorded API response from tests/fixtures. */
export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf8")) as T;
}

export interface RecordedCall {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

export interface FakeFetch {
  impl: FetchLike;
  calls: RecordedCall[];
}

/**
 * A fetch stand-in that replays canned responses in order and records
 * every request it saw. Each entry is either a JSON body (served with
 * status 200) or an explicit {status, body} pair.
 */
export function fakeFetch(
  responses: Array<{ status?: number; body: unknown } | unknown>,
): FakeFetch {
  const queue = [...responses];
  const calls: RecordedCall[] = [];
  const impl: FetchLike = async (url, init) => {
    const headers: Record<string, string> = {};
    for (const [key, value] of Object.entries(init?.headers ?? {})) {
      headers[key.toLowerCase()] = String(value);
    }
    calls.push({
      url,
      method: init?.method ?? "GET",
      headers,
      body: typeof init?.body === "string" ? JSON.parse(init.body) : null,
    });
    if (queue.length === 0) {
      throw new Error(`fakeFetch exhausted (got ${url})`);
    }
    const next = queue.shift();
    const entry =
      next !== null && typeof next === "object" && "body" in (next as object)
        ? (next as { status?: number; body: unknown })
        : { status: 200, body: next };
    return new Response(JSON.stringify(entry.body), {
      status: entry.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { impl, calls };
}
