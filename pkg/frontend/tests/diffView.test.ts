import { describe, expect, it } from "vitest";

import { highlightedKeys, isEmptyDiff, renderDiffView } from "../src/diffView.js";
import type { RapDiffPayload, SessionView } from "../src/types.js";
import { fixture } from "./helpers.js";

const diff = () => fixture<RapDiffPayload>("diff_1_2.json");
const emptyDiff = () => fixture<RapDiffPayload>("diff_empty.json");
const doneView = () => fixture<SessionView>("view_done.json");

function stepsForRevision(revision: number) {
  const version = doneView().rap_versions.find((v) => v.revision === revision);
  if (!version) throw new Error(`no revision ${revision} in fixture`);
  return version.steps;
}

function extractAll(html: string, pattern: RegExp): string[] {
  return [...html.matchAll(pattern)].map((m) => m[1]!);
}

describe("diff highlighting contract", () => {
  it("highlights exactly the keys the server listed in added_keys", () => {
    const payload = diff();
    const html = renderDiffView(payload, stepsForRevision(payload.to!));

    const headerKeys = extractAll(
      html,
      /<th class="added-key" data-added-key="([^"]+)">/g,
    );
    expect(new Set(headerKeys)).toEqual(new Set(payload.added_keys));
    expect(headerKeys).toHaveLength(payload.added_keys.length);

    // Every data-added-key occurrence anywhere in the view names a listed
    // key — nothing beyond added_keys gets the treatment.
    const allMarked = extractAll(html, /data-added-key="([^"]+)"/g);
    expect(new Set(allMarked)).toEqual(new Set(payload.added_keys));
  });

  it("agrees with the helper the browser code uses", () => {
    expect(highlightedKeys(diff())).toEqual(diff().added_keys);
    expect(highlightedKeys(emptyDiff())).toEqual([]);
  });

  it("marks exactly the added step rows", () => {
    const payload = diff();
    const html = renderDiffView(payload, stepsForRevision(payload.to!));
    const rows = extractAll(html, /data-added-step="(\d+)"/g).map(Number);
    expect(rows).toEqual(payload.added_steps.map((entry) => entry.position));
  });

  it("marks changed cells only where modified_steps says so", () => {
    const payload = diff();
    const html = renderDiffView(payload, stepsForRevision(payload.to!));
    const changedCellCount = (html.match(/class="changed-cell"/g) ?? []).length;
    const expected = payload.modified_steps.reduce(
      (total, entry) => total + Object.keys(entry.changes).length,
      0,
    );
    expect(changedCellCount).toBe(expected);
  });

  it("summarises the revision pair it was asked about", () => {
    const payload = diff();
    const html = renderDiffView(payload, stepsForRevision(payload.to!));
    expect(html).toContain(`data-diff-from="${payload.from}"`);
    expect(html).toContain(`data-diff-to="${payload.to}"`);
    expect(html).toContain("new keys: LOCATION, TIME");
  });
});

describe("empty diff", () => {
  it("recognises the recorded self-diff as empty", () => {
    expect(isEmptyDiff(emptyDiff())).toBe(true);
    expect(isEmptyDiff(diff())).toBe(false);
  });

  it("renders a no-changes state with zero highlights", () => {
    const payload = emptyDiff();
    const html = renderDiffView(payload, stepsForRevision(payload.to!));
    expect(html).toContain("data-diff-empty");
    expect(html).toContain("No changes between revision 2 and revision 2.");
    expect(html).not.toContain("data-added-key");
    expect(html).not.toContain("data-added-step");
    expect(html).not.toContain("changed-cell");
  });
});

describe("removed steps", () => {
  it("lists removed positions when the server reports them", () => {
    const payload: RapDiffPayload = {
      added_steps: [],
      removed_steps: [{ position: 1, step: { ACTION: "WAIT", OBJECT: "-" } }],
      modified_steps: [],
      added_keys: [],
      removed_keys: ["SPEED"],
      from: 2,
      to: 3,
    };
    const html = renderDiffView(payload, stepsForRevision(2));
    expect(html).toContain("Removed at position(s): 2");
    expect(html).toContain("dropped keys: SPEED");
    expect(html).not.toContain("data-added-key");
  });
});
