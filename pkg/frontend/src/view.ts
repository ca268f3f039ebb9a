/** DOM rendering helpers. All data shown here comes from the model layer. */

import { buildChart, polylineAttribute } from "./chart.js";
import type { CompareCell } from "./compare.js";
import type { SessionRun } from "./runs.js";
import { iterationsCompleted } from "./runs.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function statusBadge(run: SessionRun): HTMLElement {
  const badge = el("span", `badge badge-${run.status}`, run.status);
  if (run.stale) {
    badge.classList.add("badge-stale");
    badge.textContent = `${run.status} (stale)`;
  }
  return badge;
}

export function renderFrameStrip(run: SessionRun): HTMLElement {
  const strip = el("div", "frame-strip");
  for (const frame of run.frames) {
    const cell = el("figure", "frame-cell");
    const img = el("img");
    img.src = frame.url;
    img.alt = `iteration ${frame.iteration}`;
    img.loading = "lazy";
    const caption = el("figcaption", undefined, String(frame.iteration));
    cell.append(img, caption);
    strip.append(cell);
  }
  return strip;
}

export function renderLossChart(run: SessionRun): SVGSVGElement {
  const geometry = buildChart(run.lossRows);
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${geometry.width} ${geometry.height}`);
  svg.setAttribute("class", "loss-chart");
  for (const series of geometry.series) {
    const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute("points", polylineAttribute(series.points));
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", series.color);
    line.setAttribute("stroke-width", "1.5");
    line.setAttribute("data-series", series.name);
    svg.append(line);
  }
  const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
  label.setAttribute("x", "4");
  label.setAttribute("y", "14");
  label.setAttribute("class", "chart-label");
  label.textContent =
    geometry.xMax > 0 ? `log loss over ${geometry.xMax} iterations` : "waiting for loss rows";
  svg.append(label);
  return svg;
}

export function renderRunCard(
  run: SessionRun,
  handlers: {
    onPin: () => void;
    onCancel: () => void;
    onUseAsNext: () => void;
  },
): HTMLElement {
  const card = el("article", "run-card");
  card.dataset.jobId = run.jobId;

  const header = el("header", "run-header");
  header.append(el("strong", undefined, run.jobId), statusBadge(run));
  header.append(
    el(
      "span",
      "run-meta",
      `${iterationsCompleted(run)} iterations, ${run.frames.length} frames`,
    ),
  );

  const pin = el("button", "pin-button", run.pinned ? "unpin" : "pin");
  pin.addEventListener("click", handlers.onPin);
  const reuse = el("button", undefined, "use as next");
  reuse.addEventListener("click", handlers.onUseAsNext);
  header.append(pin, reuse);
  if (run.status === "queued" || run.status === "running") {
    const cancel = el("button", "cancel-button", "cancel");
    cancel.addEventListener("click", handlers.onCancel);
    header.append(cancel);
  }
  card.append(header);

  if (run.error) card.append(el("p", "run-error", run.error));
  card.append(renderFrameStrip(run));
  card.append(renderLossChart(run));
  return card;
}

export function renderComparePanel(
  cells: CompareCell[],
  onUse: (cell: CompareCell) => void,
): HTMLElement {
  const panel = el("section", "compare-panel");
  if (cells.length === 0) {
    panel.append(el("p", "compare-hint", "pin two or more runs to compare"));
    return panel;
  }
  for (const cell of cells) {
    const box = el("div", "compare-cell");
    if (cell.frameUrl) {
      const img = el("img");
      img.src = cell.frameUrl;
      img.alt = `final frame of ${cell.jobId}`;
      box.append(img);
    }
    const list = el("dl", "compare-diff");
    for (const [field, value] of Object.entries(cell.highlighted)) {
      list.append(el("dt", "diff-field", field));
      list.append(el("dd", "diff-value", String(value)));
    }
    box.append(list);
    const use = el("button", undefined, "use as next");
    use.addEventListener("click", () => onUse(cell));
    box.append(use);
    panel.append(box);
  }
  return panel;
}

export function showFieldError(fieldName: string, message: string): void {
  const slot = document.querySelector(`[data-error-for="${fieldName}"]`);
  if (slot) slot.textContent = message;
}

export function clearFieldErrors(): void {
  document.querySelectorAll("[data-error-for]").forEach((node) => {
    node.textContent = "";
  });
}
