/**
 * Pure view state: what each screen shows, independent of the DOM.
 * The render layer turns these plans into elements one-to-one, never
 * re-sorting: list order is exactly the API response order.
 */

import { Story } from "./decode.js";

export type Mode = "viewer" | "admin";

export interface StoryRow {
  id: number;
  title: string;
  author: string;
  category: string;
  created: Date;
  thumb: number | null;
  status: "active" | "inactive" | null; // null: hidden in viewer mode
  pending: boolean; // a mutation is in flight; buttons disabled
}

export interface ListState {
  mode: Mode;
  session: string | null;
  rows: StoryRow[];
  error: string | null;
}

export function buildRows(stories: Story[], mode: Mode): StoryRow[] {
  const visible =
    mode === "admin" ? stories : stories.filter((s) => s.status === "active");
  return visible.map((story) => ({
    id: story.id,
    title: story.title,
    author: story.author,
    category: story.category,
    created: story.created,
    thumb: story.thumb,
    status: mode === "admin" ? story.status : null,
    pending: false,
  }));
}

/** Optimistic toggle: flip the badge now, reconcile on the response. */
export function applyToggle(rows: StoryRow[], id: number): StoryRow[] {
  return rows.map((row) =>
    row.id === id
      ? {
          ...row,
          status: row.status === "active" ? "inactive" : "active",
          pending: true,
        }
      : row,
  );
}

export function settleRow(rows: StoryRow[], id: number): StoryRow[] {
  return rows.map((row) => (row.id === id ? { ...row, pending: false } : row));
}

/** Revert an optimistic change that the server rejected. */
export function revertToggle(rows: StoryRow[], id: number): StoryRow[] {
  return settleRow(applyToggle(rows, id), id).map((row) =>
    row.id === id ? { ...row, pending: false } : row,
  );
}

export function removeRow(rows: StoryRow[], id: number): StoryRow[] {
  return rows.filter((row) => row.id !== id);
}

export interface FieldErrors {
  [field: string]: string;
}

export function fieldErrors(
  detail: Array<{ field: string; reason: string }>,
): FieldErrors {
  const errors: FieldErrors = {};
  for (const { field, reason } of detail) errors[field] = reason;
  return errors;
}

export function formatDate(date: Date): string {
  return date.toISOString().replace("T", " ").slice(0, 16) + " UTC";
}
