/** Heatmap view-model and renderer for disparity matrices.
 *
 * Strictly presentational: every number shown comes verbatim from one
 * matrix payload; this module only formats, never recomputes.
 */

import type { MatrixPayload } from "./api.js";

export interface HeatmapCell {
  row: string;
  col: string;
  value: number | null;
  text: string;
  title: string;
  flagged: boolean;
  undefined: boolean;
  diagonal: boolean;
}

export function heatmapCells(matrix: MatrixPayload): HeatmapCell[][] {
  return matrix.groups.map((rowLabel, i) =>
    matrix.groups.map((colLabel, j) => {
      const value = matrix.values[i][j];
      const isUndefined = matrix.undefined[i][j] === 1;
      return {
        row: rowLabel,
        col: colLabel,
        value,
        text: isUndefined ? "n/a" : (value as number).toFixed(3),
        title: isUndefined
          ? `${rowLabel} vs ${colLabel}: undefined`
          : `${rowLabel} vs ${colLabel}: ${value}`,
        flagged: matrix.flags[i][j] === 1,
        undefined: isUndefined,
        diagonal: i === j,
      };
    }));
}

/** Number of distinct flagged pairs in the payload (upper triangle). */
export function flaggedPairCount(matrix: MatrixPayload): number {
  let count = 0;
  for (let i = 0; i < matrix.groups.length; i += 1) {
    for (let j = i + 1; j < matrix.groups.length; j += 1) {
      if (matrix.flags[i][j] === 1) {
        count += 1;
      }
    }
  }
  return count;
}

export function renderHeatmap(container: HTMLElement, matrix: MatrixPayload): void {
  const cells = heatmapCells(matrix);
  container.replaceChildren();
  const table = document.createElement("table");
  table.className = "heatmap";

  const head = table.insertRow();
  head.insertCell();
  for (const group of matrix.groups) {
    const th = document.createElement("th");
    th.textContent = group;
    head.appendChild(th);
  }

  for (const rowCells of cells) {
    const tr = table.insertRow();
    const th = document.createElement("th");
    th.textContent = rowCells[0]?.row ?? "";
    tr.appendChild(th);
    for (const cell of rowCells) {
      const td = tr.insertCell();
      td.textContent = cell.text;
      td.title = cell.title;
      td.classList.add("cell");
      if (cell.diagonal) td.classList.add("diagonal");
      if (cell.flagged) td.classList.add("flagged");
      if (cell.undefined) td.classList.add("undefined");
    }
  }
  container.appendChild(table);

  const note = document.createElement("p");
  note.className = "heatmap-note";
  note.textContent =
    `${matrix.criterion} | tolerance ${matrix.tolerance} | ` +
    `${flaggedPairCount(matrix)} flagged pair(s)`;
  container.appendChild(note);
}
