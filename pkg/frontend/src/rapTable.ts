/**
 * Render a robot action plan as an HTML table.
 *
 * Column order is first-seen across the steps exactly as the API emitted
 * them — the server already puts the canonical keys first, and extension
 * keys (TIME, LOCATION, ...) appear in the order the plan introduced them.
 * The renderer never invents, reorders, or interprets keys.
 */

import type { RapStep } from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function firstSeenColumns(steps: readonly RapStep[]): string[] {
  const columns: string[] = [];
  const seen = new Set<string>();
  for (const step of steps) {
    for (const key of Object.keys(step)) {
      if (!seen.has(key)) {
        seen.add(key);
        columns.push(key);
      }
    }
  }
  return columns;
}

export interface RapTableOptions {
  /** Column keys to mark as newly added (headers get data-added-key). */
  highlightKeys?: ReadonlySet<string>;
  /** Zero-based step positions to mark as newly added rows. */
  addedPositions?: ReadonlySet<number>;
  /** Per-position sets of keys whose values changed. */
  changedCells?: ReadonlyMap<number, ReadonlySet<string>>;
}

export function renderRapTable(
  steps: readonly RapStep[],
  options: RapTableOptions = {},
): string {
  if (steps.length === 0) {
    return `<p class="rap-empty">No plan steps yet.</p>`;
  }
  const columns = firstSeenColumns(steps);
  const highlight = options.highlightKeys ?? new Set<string>();
  const addedRows = options.addedPositions ?? new Set<number>();
  const changed = options.changedCells ?? new Map<number, ReadonlySet<string>>();

  const headCells = columns
    .map((key) => {
      const marked = highlight.has(key)
        ? ` class="added-key" data-added-key="${escapeHtml(key)}"`
        : "";
      return `<th${marked}>${escapeHtml(key)}</th>`;
    })
    .join("");

  const bodyRows = steps
    .map((step, position) => {
      const rowAdded = addedRows.has(position);
      const rowAttrs = rowAdded
        ? ` class="added-step" data-added-step="${position}"`
        : "";
      const changedKeys = changed.get(position);
      const cells = columns
        .map((key) => {
          const value = key in step ? step[key] ?? "" : "";
          const attrs: string[] = [];
          if (highlight.has(key)) attrs.push(`data-added-key="${escapeHtml(key)}"`);
          if (changedKeys?.has(key)) attrs.push(`class="changed-cell"`);
          const attrText = attrs.length > 0 ? " " + attrs.join(" ") : "";
          return `<td${attrText}>${escapeHtml(value)}</td>`;
        })
        .join("");
      return `<tr${rowAttrs}><td class="step-no">${position + 1}</td>${cells}</tr>`;
    })
    .join("\n");

  return [
    `<table class="rap-table">`,
    `<thead><tr><th class="step-no">#</th>${headCells}</tr></thead>`,
    `<tbody>`,
    bodyRows,
    `</tbody>`,
    `</table>`,
  ].join("\n");
}
