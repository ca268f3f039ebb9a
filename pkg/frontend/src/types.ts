/** Wire types mirrored from the job service. */

export interface EngineConfig {
  num_iterations: number;
  save_every: number;
  optimizer: "adam" | "lbfgs";
  learning_rate: number;
  tv_strength: number;
  content_weight: number;
  style_weight: number;
  content_taps: string[];
  style_taps: string[];
  style_target_mode: "gram" | "spatial_average";
  init: "noise" | "content";
  seed: number;
  image_size: number;
}

export interface JobSummary {
  id: string;
  kind: "single" | "sweep";
  status: "queued" | "running" | "done" | "failed" | "cancelled";
  config: Partial<EngineConfig> & Record<string, unknown>;
  created: number;
  started: number | null;
  finished: number | null;
  error: string;
  frame_count: number;
  frame_iterations: number[];
  iterations_logged: number;
}

export interface LossRow {
  iteration: number;
  content: number;
  style: number;
  tv: number;
  total: number;
}

export interface FrameRef {
  index: number;
  iteration: number;
  url: string;
}

export type PresetMap = Record<string, Partial<EngineConfig>>;

export const TERMINAL_STATUSES = ["done", "failed", "cancelled"] as const;

export function isTerminal(status: string): boolean {
  return (TERMINAL_STATUSES as readonly string[]).includes(status);
}
