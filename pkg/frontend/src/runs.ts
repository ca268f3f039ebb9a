/** Session-run state: everything displayed is derived from service responses.
 *
 * A SessionRun never invents data: frames come from the summary's
 * frame_iterations (index-addressed), loss rows from the losses CSV. The
 * polling helpers implement retry-with-backoff and the stale flag.
 */

import { parseLossCsv } from "./lossCsv.js";
import type { FrameRef, JobSummary, LossRow } from "./types.js";
import { isTerminal } from "./types.js";

export interface SessionRun {
  jobId: string;
  config: Record<string, unknown>;
  status: string;
  error: string;
  frames: FrameRef[];
  lossRows: LossRow[];
  pinned: boolean;
  stale: boolean;
  failures: number;
}

export function newRun(jobId: string, config: Record<string, unknown>): SessionRun {
  return {
    jobId,
    config,
    status: "queued",
    error: "",
    frames: [],
    lossRows: [],
    pinned: false,
    stale: false,
    failures: 0,
  };
}

/** Fold a polled job summary into the run; frames stay sorted by iteration. */
export function applySummary(
  run: SessionRun,
  summary: JobSummary,
  frameUrl: (id: string, index: number) => string,
): SessionRun {
  const frames = summary.frame_iterations
    .map((iteration, index) => ({
      index,
      iteration,
      url: frameUrl(summary.id, index),
    }))
    .sort((a, b) => a.iteration - b.iteration);
  return {
    ...run,
    status: summary.status,
    error: summary.error,
    frames,
    stale: false,
    failures: 0,
  };
}

/** Fold a losses CSV snapshot into the run. */
export function applyLossCsv(run: SessionRun, csvText: string): SessionRun {
  const rows = parseLossCsv(csvText);
  // Snapshots are prefixes of later snapshots; never let a short read
  // shrink what the user already saw.
  if (rows.length < run.lossRows.length) return run;
  return { ...run, lossRows: rows };
}

export function applyPollFailure(run: SessionRun): SessionRun {
  return { ...run, stale: true, failures: run.failures + 1 };
}

export function shouldKeepPolling(run: SessionRun): boolean {
  return !isTerminal(run.status);
}

/** Exponential backoff with a cap; healthy runs poll at the base interval. */
export function nextPollDelay(failures: number, baseMs = 750, capMs = 15000): number {
  return Math.min(capMs, baseMs * Math.pow(2, failures));
}

export function iterationsCompleted(run: SessionRun): number {
  return run.lossRows.length === 0 ? 0 : run.lossRows[run.lossRows.length - 1].iteration;
}

export function finalFrame(run: SessionRun): FrameRef | null {
  return run.frames.length === 0 ? null : run.frames[run.frames.length - 1];
}

export function togglePinned(run: SessionRun): SessionRun {
  return { ...run, pinned: !run.pinned };
}
