/** Form state for configuring a run: slider bounds, validation, presets.
 *
 * The four headline parameters are sliders; learning rate and smoothing
 * strength use log-scale positions because their useful ranges span several
 * orders of magnitude. The content:style ratio is exposed as a single
 * content-weight slider with the style weight pinned at 100.
 */

import type { EngineConfig, PresetMap } from "./types.js";

export interface FieldBounds {
  min: number;
  max: number;
  log: boolean;
  integer: boolean;
}

export const FORM_BOUNDS: Record<string, FieldBounds> = {
  num_iterations: { min: 0, max: 1000, log: false, integer: true },
  learning_rate: { min: 1e-3, max: 1e2, log: true, integer: false },
  tv_strength: { min: 1e-8, max: 1e0, log: true, integer: false },
  content_weight: { min: 10, max: 300, log: false, integer: false },
};

export const STYLE_WEIGHT_PINNED = 100;

export interface FormState {
  num_iterations: number;
  learning_rate: number;
  tv_strength: number;
  content_weight: number;
  optimizer: "adam" | "lbfgs";
  init: "noise" | "content";
  style_target_mode: "gram" | "spatial_average";
  save_every: number;
  seed: number;
  image_size: number;
  contentFile: Blob | null;
  styleFile: Blob | null;
}

export function defaultForm(): FormState {
  return {
    num_iterations: 300,
    learning_rate: 20,
    tv_strength: 1e-6,
    content_weight: 100,
    optimizer: "lbfgs",
    init: "content",
    style_target_mode: "gram",
    save_every: 50,
    seed: 0,
    image_size: 256,
    contentFile: null,
    styleFile: null,
  };
}

/** Map a slider position in [0,1] to a field value (log scale where marked). */
export function sliderToValue(position: number, bounds: FieldBounds): number {
  const p = Math.min(1, Math.max(0, position));
  let value: number;
  if (bounds.log) {
    const lo = Math.log10(bounds.min);
    const hi = Math.log10(bounds.max);
    value = Math.pow(10, lo + p * (hi - lo));
  } else {
    value = bounds.min + p * (bounds.max - bounds.min);
  }
  return bounds.integer ? Math.round(value) : value;
}

/** Inverse of sliderToValue (clamped into [0,1]). */
export function valueToSlider(value: number, bounds: FieldBounds): number {
  let p: number;
  if (bounds.log) {
    const lo = Math.log10(bounds.min);
    const hi = Math.log10(bounds.max);
    p = (Math.log10(value) - lo) / (hi - lo);
  } else {
    p = (value - bounds.min) / (bounds.max - bounds.min);
  }
  return Math.min(1, Math.max(0, p));
}

/** Field-keyed validation problems; an empty map means the form can submit. */
export function validateForm(form: FormState): Record<string, string> {
  const problems: Record<string, string> = {};
  for (const [field, bounds] of Object.entries(FORM_BOUNDS)) {
    const value = form[field as keyof FormState] as number;
    if (typeof value !== "number" || Number.isNaN(value)) {
      problems[field] = "must be a number";
    } else if (value < bounds.min || value > bounds.max) {
      problems[field] = `must be between ${bounds.min} and ${bounds.max}`;
    } else if (bounds.integer && !Number.isInteger(value)) {
      problems[field] = "must be a whole number";
    }
  }
  if (form.save_every < 1) problems.save_every = "must be at least 1";
  if (form.image_size < 8) problems.image_size = "must be at least 8";
  if (form.seed < 0 || !Number.isInteger(form.seed)) problems.seed = "must be a whole number >= 0";
  if (!form.contentFile) problems.contentFile = "select a content image";
  if (!form.styleFile) problems.styleFile = "select a style image";
  return problems;
}

/** The config JSON part submitted with the two images. */
export function buildConfig(form: FormState): Record<string, unknown> {
  return {
    num_iterations: form.num_iterations,
    save_every: form.save_every,
    optimizer: form.optimizer,
    learning_rate: form.learning_rate,
    tv_strength: form.tv_strength,
    content_weight: form.content_weight,
    style_weight: STYLE_WEIGHT_PINNED,
    style_target_mode: form.style_target_mode,
    init: form.init,
    seed: form.seed,
    image_size: form.image_size,
  };
}

const NUMERIC_FIELDS = [
  "num_iterations",
  "save_every",
  "learning_rate",
  "tv_strength",
  "content_weight",
  "seed",
  "image_size",
] as const;

const CHOICE_FIELDS = ["optimizer", "init", "style_target_mode"] as const;

/** Fill the form from a preset or a previous run's config; files are kept. */
export function fillFromConfig(
  form: FormState,
  config: Partial<EngineConfig> & Record<string, unknown>,
): FormState {
  const next = { ...form };
  for (const field of NUMERIC_FIELDS) {
    const value = config[field];
    if (typeof value === "number") (next as Record<string, unknown>)[field] = value;
  }
  for (const field of CHOICE_FIELDS) {
    const value = config[field];
    if (typeof value === "string") (next as Record<string, unknown>)[field] = value;
  }
  return next;
}

export function presetNames(presets: PresetMap): string[] {
  return Object.keys(presets).sort();
}

/** Attribute a server-side 400 to the form field it names, if any. */
export function fieldForServerError(detail: string): string | null {
  const known = [...Object.keys(FORM_BOUNDS), "save_every", "seed", "image_size",
                 "optimizer", "init", "style_target_mode", "content", "style"];
  for (const field of known) {
    if (detail.includes(field)) return field;
  }
  return null;
}
