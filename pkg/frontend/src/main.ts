/** Studio entry point: form wiring, submission, polling loops, compare panel. */

import { ApiError, StudioApi } from "./api.js";
import { canCompare, comparePanel } from "./compare.js";
import {
  FORM_BOUNDS,
  FormState,
  buildConfig,
  defaultForm,
  fieldForServerError,
  fillFromConfig,
  sliderToValue,
  validateForm,
  valueToSlider,
} from "./form.js";
import {
  SessionRun,
  applyLossCsv,
  applyPollFailure,
  applySummary,
  newRun,
  nextPollDelay,
  shouldKeepPolling,
  togglePinned,
} from "./runs.js";
import { clearFieldErrors, el, renderComparePanel, renderRunCard, showFieldError } from "./view.js";

const state = {
  form: defaultForm(),
  runs: [] as SessionRun[],
  api: new StudioApi(localStorage.getItem("restyle-api") ?? "http://127.0.0.1:8000"),
};

function query<T extends Element>(selector: string): T {
  const node = document.querySelector(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node as T;
}

function formatValue(field: string, value: number): string {
  if (field === "num_iterations" || field === "content_weight") return String(Math.round(value));
  return value.toExponential(1).replace("e+0", "e").replace("e-0", "e-");
}

function syncFormControls(): void {
  for (const [field, bounds] of Object.entries(FORM_BOUNDS)) {
    const slider = query<HTMLInputElement>(`#slider-${field}`);
    const value = state.form[field as keyof FormState] as number;
    slider.value = String(valueToSlider(value, bounds));
    query(`#value-${field}`).textContent =
      field === "content_weight"
        ? `${Math.round(value)}:100`
        : formatValue(field, value);
  }
  query<HTMLSelectElement>("#field-optimizer").value = state.form.optimizer;
  query<HTMLSelectElement>("#field-init").value = state.form.init;
  query<HTMLSelectElement>("#field-style-target").value = state.form.style_target_mode;
  query<HTMLInputElement>("#field-save-every").value = String(state.form.save_every);
  query<HTMLInputElement>("#field-seed").value = String(state.form.seed);
  query<HTMLInputElement>("#field-image-size").value = String(state.form.image_size);
}

function renderRuns(): void {
  const list = query<HTMLElement>("#run-list");
  list.replaceChildren();
  for (const run of [...state.runs].reverse()) {
    list.append(
      renderRunCard(run, {
        onPin: () => {
          updateRun(run.jobId, togglePinned);
          renderRuns();
        },
        onCancel: () => {
          void state.api.cancelJob(run.jobId).catch(() => undefined);
        },
        onUseAsNext: () => {
          state.form = fillFromConfig(state.form, run.config);
          syncFormControls();
        },
      }),
    );
  }
  const compare = query<HTMLElement>("#compare-root");
  compare.replaceChildren(
    renderComparePanel(canCompare(state.runs) ? comparePanel(state.runs) : [], (cell) => {
      state.form = fillFromConfig(state.form, cell.config);
      syncFormControls();
    }),
  );
}

function updateRun(jobId: string, fn: (run: SessionRun) => SessionRun): void {
  state.runs = state.runs.map((run) => (run.jobId === jobId ? fn(run) : run));
}

function getRun(jobId: string): SessionRun | undefined {
  return state.runs.find((run) => run.jobId === jobId);
}

async function pollOnce(jobId: string): Promise<void> {
  const api = state.api;
  try {
    const summary = await api.getJob(jobId);
    updateRun(jobId, (run) => applySummary(run, summary, (id, k) => api.frameUrl(id, k)));
    const csv = await api.getLossCsv(jobId);
    updateRun(jobId, (run) => applyLossCsv(run, csv));
  } catch {
    updateRun(jobId, applyPollFailure);
  }
  renderRuns();
}

function startPolling(jobId: string): void {
  const tick = async () => {
    await pollOnce(jobId);
    const run = getRun(jobId);
    if (run && shouldKeepPolling(run)) {
      setTimeout(tick, nextPollDelay(run.failures));
    }
  };
  void tick();
}

async function submit(): Promise<void> {
  clearFieldErrors();
  const problems = validateForm(state.form);
  if (Object.keys(problems).length > 0) {
    for (const [field, message] of Object.entries(problems)) showFieldError(field, message);
    return;
  }
  const config = buildConfig(state.form);
  try {
    const { id } = await state.api.submitJob(
      state.form.contentFile as Blob,
      state.form.styleFile as Blob,
      config,
    );
    state.runs = [...state.runs, newRun(id, config)];
    renderRuns();
    startPolling(id);
  } catch (error) {
    if (error instanceof ApiError) {
      const field = fieldForServerError(error.detail);
      if (field) showFieldError(field, error.detail);
      else showFieldError("form", error.detail);
    } else {
      showFieldError("form", "service unreachable");
    }
  }
}

async function loadPresets(): Promise<void> {
  const host = query<HTMLElement>("#preset-buttons");
  host.replaceChildren();
  try {
    const presets = await state.api.getPresets();
    for (const name of Object.keys(presets).sort()) {
      const button = el("button", "preset-button", name);
      button.addEventListener("click", () => {
        state.form = fillFromConfig(state.form, presets[name]);
        syncFormControls();
      });
      host.append(button);
    }
  } catch {
    host.append(el("span", "preset-error", "presets unavailable"));
  }
}

function wireControls(): void {
  for (const [field, bounds] of Object.entries(FORM_BOUNDS)) {
    const slider = query<HTMLInputElement>(`#slider-${field}`);
    slider.addEventListener("input", () => {
      (state.form as unknown as Record<string, number>)[field] = sliderToValue(
        Number(slider.value),
        bounds,
      );
      syncFormControls();
    });
  }
  query<HTMLSelectElement>("#field-optimizer").addEventListener("change", (event) => {
    state.form.optimizer = (event.target as HTMLSelectElement).value as FormState["optimizer"];
  });
  query<HTMLSelectElement>("#field-init").addEventListener("change", (event) => {
    state.form.init = (event.target as HTMLSelectElement).value as FormState["init"];
  });
  query<HTMLSelectElement>("#field-style-target").addEventListener("change", (event) => {
    state.form.style_target_mode = (event.target as HTMLSelectElement)
      .value as FormState["style_target_mode"];
  });
  for (const [selector, field] of [
    ["#field-save-every", "save_every"],
    ["#field-seed", "seed"],
    ["#field-image-size", "image_size"],
  ] as const) {
    query<HTMLInputElement>(selector).addEventListener("change", (event) => {
      (state.form as unknown as Record<string, number>)[field] = Number(
        (event.target as HTMLInputElement).value,
      );
    });
  }
  query<HTMLInputElement>("#file-content").addEventListener("change", (event) => {
    state.form.contentFile = (event.target as HTMLInputElement).files?.[0] ?? null;
  });
  query<HTMLInputElement>("#file-style").addEventListener("change", (event) => {
    state.form.styleFile = (event.target as HTMLInputElement).files?.[0] ?? null;
  });
  query<HTMLButtonElement>("#submit-run").addEventListener("click", () => void submit());

  const apiInput = query<HTMLInputElement>("#api-base");
  apiInput.value = state.api.baseUrl;
  apiInput.addEventListener("change", () => {
    state.api = new StudioApi(apiInput.value);
    localStorage.setItem("restyle-api", apiInput.value);
    void loadPresets();
  });
}

export function start(): void {
  wireControls();
  syncFormControls();
  renderRuns();
  void loadPresets();
}

if (typeof document !== "undefined" && document.getElementById("studio-root")) {
  start();
}
