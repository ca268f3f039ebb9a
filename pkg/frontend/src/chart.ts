/** Loss-chart geometry: pure mapping from loss rows to SVG polyline points.
 *
 * y is log-scaled (loss terms span orders of magnitude); non-positive values
 * are clamped to the smallest positive value in view so they stay drawable.
 */

import type { LossRow } from "./types.js";

export interface ChartSeries {
  name: "content" | "style" | "tv" | "total";
  color: string;
  points: Array<[number, number]>;
}

export interface ChartGeometry {
  series: ChartSeries[];
  xMax: number;
  yMin: number;
  yMax: number;
  width: number;
  height: number;
}

const SERIES: Array<[ChartSeries["name"], string]> = [
  ["content", "#d1495b"],
  ["style", "#1b6ca8"],
  ["tv", "#66a182"],
  ["total", "#2e2e38"],
];

export function buildChart(rows: LossRow[], width = 560, height = 220): ChartGeometry {
  if (rows.length === 0) {
    return { series: [], xMax: 0, yMin: 0, yMax: 0, width, height };
  }
  const xMax = rows[rows.length - 1].iteration;
  const values = rows.flatMap((r) => [r.content, r.style, r.tv, r.total]);
  const positive = values.filter((v) => v > 0);
  const floor = positive.length > 0 ? Math.min(...positive) : 1e-12;
  const yMin = floor;
  const yMax = Math.max(...values, floor * 10);

  const logMin = Math.log10(yMin);
  const logMax = Math.log10(yMax);
  const spanX = Math.max(1, xMax);
  const spanY = Math.max(1e-9, logMax - logMin);

  const toX = (iteration: number) => (iteration / spanX) * width;
  const toY = (value: number) => {
    const clamped = Math.max(value, floor);
    return height - ((Math.log10(clamped) - logMin) / spanY) * height;
  };

  const series: ChartSeries[] = SERIES.map(([name, color]) => ({
    name,
    color,
    points: rows.map((row) => [toX(row.iteration), toY(row[name])] as [number, number]),
  }));
  return { series, xMax, yMin, yMax, width, height };
}

export function polylineAttribute(points: Array<[number, number]>): string {
  return points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
}
