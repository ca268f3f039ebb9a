/** Parse the service's loss CSV (iteration,content,style,tv,total). */

import type { LossRow } from "./types.js";

export function parseLossCsv(text: string): LossRow[] {
  const lines = text.split("\n").filter((line) => line.trim().length > 0);
  if (lines.length === 0) return [];
  const start = lines[0].startsWith("iteration") ? 1 : 0;
  const rows: LossRow[] = [];
  for (const line of lines.slice(start)) {
    const parts = line.split(",");
    if (parts.length !== 5) continue;
    const row: LossRow = {
      iteration: Number(parts[0]),
      content: Number(parts[1]),
      style: Number(parts[2]),
      tv: Number(parts[3]),
      total: Number(parts[4]),
    };
    if ([row.iteration, row.content, row.style, row.tv, row.total].some(Number.isNaN)) {
      continue;
    }
    // Rows must be strictly increasing in iteration; anything else means a
    // torn read and the remainder of the snapshot is dropped.
    if (rows.length > 0 && row.iteration <= rows[rows.length - 1].iteration) break;
    rows.push(row);
  }
  return rows;
}
