/**
 * Revision diff view.
 *
 * Highlights come straight from the server's diff payload: the set of
 * highlighted columns is exactly `added_keys`, added rows are exactly the
 * positions in `added_steps`, and changed cells are exactly the keys in
 * `modified_steps[].changes`. The view computes nothing itself beyond
 * turning that payload into markup.
 */

import { renderRapTable } from "./rapTable.js";
import type { RapDiffPayload, RapStep } from "./types.js";

export function isEmptyDiff(diff: RapDiffPayload): boolean {
  return (
    diff.added_steps.length === 0 &&
    diff.removed_steps.length === 0 &&
    diff.modified_steps.length === 0 &&
    diff.added_keys.length === 0 &&
    diff.removed_keys.length === 0
  );
}

/** The columns the view will highlight — by contract, exactly added_keys. */
export function highlightedKeys(diff: RapDiffPayload): string[] {
  return [...diff.added_keys];
}

export function renderDiffView(
  diff: RapDiffPayload,
  toSteps: readonly RapStep[],
): string {
  const fromRev = diff.from ?? "?";
  const toRev = diff.to ?? "?";
  if (isEmptyDiff(diff)) {
    return [
      `<div class="diff-view" data-diff-empty>`,
      `<p class="no-changes">No changes between revision ${fromRev} and revision ${toRev}.</p>`,
      `</div>`,
    ].join("\n");
  }

  const highlight = new Set(highlightedKeys(diff));
  const addedPositions = new Set(diff.added_steps.map((entry) => entry.position));
  const changedCells = new Map<number, Set<string>>();
  for (const entry of diff.modified_steps) {
    changedCells.set(entry.position, new Set(Object.keys(entry.changes)));
  }

  const summaryBits: string[] = [];
  if (diff.added_steps.length > 0) {
    summaryBits.push(`${diff.added_steps.length} step(s) added`);
  }
  if (diff.removed_steps.length > 0) {
    summaryBits.push(`${diff.removed_steps.length} step(s) removed`);
  }
  if (diff.modified_steps.length > 0) {
    summaryBits.push(`${diff.modified_steps.length} step(s) modified`);
  }
  if (diff.added_keys.length > 0) {
    summaryBits.push(`new keys: ${diff.added_keys.join(", ")}`);
  }
  if (diff.removed_keys.length > 0) {
    summaryBits.push(`dropped keys: ${diff.removed_keys.join(", ")}`);
  }

  const removedNote =
    diff.removed_steps.length > 0
      ? `<p class="removed-steps">Removed at position(s): ${diff.removed_steps
          .map((entry) => entry.position + 1)
          .join(", ")}</p>`
      : "";

  return [
    `<div class="diff-view" data-diff-from="${fromRev}" data-diff-to="${toRev}">`,
    `<p class="diff-summary">Revision ${fromRev} &rarr; ${toRev}: ${summaryBits.join("; ")}.</p>`,
    renderRapTable(toSteps, {
      highlightKeys: highlight,
      addedPositions,
      changedCells,
    }),
    removedNote,
    `</div>`,
  ]
    .filter((part) => part !== "")
    .join("\n");
}
