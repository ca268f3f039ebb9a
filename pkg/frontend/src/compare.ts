/** Side-by-side comparison of pinned runs and the resubmission loop. */

import type { SessionRun } from "./runs.js";

export const COMPARED_FIELDS = [
  "num_iterations",
  "save_every",
  "optimizer",
  "learning_rate",
  "tv_strength",
  "content_weight",
  "style_weight",
  "style_target_mode",
  "init",
  "seed",
  "image_size",
] as const;

export function pinnedRuns(runs: SessionRun[]): SessionRun[] {
  return runs.filter((run) => run.pinned);
}

export function canCompare(runs: SessionRun[]): boolean {
  return pinnedRuns(runs).length >= 2;
}

/** Fields whose values differ across any of the given runs' configs. */
export function differingFields(runs: SessionRun[]): string[] {
  if (runs.length < 2) return [];
  const fields: string[] = [];
  for (const field of COMPARED_FIELDS) {
    const values = runs.map((run) => JSON.stringify(run.config[field] ?? null));
    if (new Set(values).size > 1) fields.push(field);
  }
  return fields;
}

export interface CompareCell {
  jobId: string;
  frameUrl: string | null;
  config: Record<string, unknown>;
  highlighted: Record<string, unknown>;
}

/** One cell per pinned run: final frame plus its differing parameters. */
export function comparePanel(runs: SessionRun[]): CompareCell[] {
  const pinned = pinnedRuns(runs);
  if (pinned.length < 2) return [];
  const diff = differingFields(pinned);
  return pinned.map((run) => ({
    jobId: run.jobId,
    frameUrl: run.frames.length > 0 ? run.frames[run.frames.length - 1].url : null,
    config: run.config,
    highlighted: Object.fromEntries(diff.map((field) => [field, run.config[field] ?? null])),
  }));
}
