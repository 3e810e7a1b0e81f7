/** Torus heatmap of a gauge-fixed potential scan with the minimum marked.
 *
 * Scan CSVs carry the potential over [-pi, pi)^(n-1) with the first angle
 * pinned to zero, row-major, last axis fastest. A two-axis scan renders
 * directly. A one-axis scan (two machines) is expanded over the full
 * (theta_1, theta_2) torus: the potential depends only on the angle
 * difference, so the slice value at theta_2 - theta_1 fills the diagonal.
 */

import { NumericTable } from "./csv.js";
import { BLACK, Raster, heatColor } from "./raster.js";

export interface PotentialGrid {
  axis: Float64Array;
  /** values[i][j]; for 1-axis scans values[0] holds the slice */
  values: Float64Array[];
  axes: number;
  argmin: number[]; // grid indices of the minimum
}

export function parseScan(table: NumericTable): PotentialGrid {
  const axes = table.header.length - 1;
  if (axes < 1 || axes > 2 || table.header[table.header.length - 1] !== "S") {
    throw new Error("scan CSV must have columns theta_2[,theta_3],S");
  }
  const s = table.columns[table.header.length - 1];
  if (axes === 1) {
    const axis = table.columns[0];
    for (let r = 1; r < table.rows; r++) {
      if (axis[r] <= axis[r - 1]) {
        throw new Error("scan axis must be strictly increasing");
      }
    }
    let best = 0;
    for (let r = 1; r < table.rows; r++) {
      if (s[r] < s[best]) best = r;
    }
    return { axis: Float64Array.from(axis), values: [Float64Array.from(s)], axes: 1, argmin: [best] };
  }
  const resolution = Math.round(Math.sqrt(table.rows));
  if (resolution * resolution !== table.rows) {
    throw new Error(`two-axis scan needs a full row-major grid, got ${table.rows} rows`);
  }
  const axis = new Float64Array(resolution);
  const values: Float64Array[] = [];
  for (let i = 0; i < resolution; i++) {
    values.push(new Float64Array(resolution));
    axis[i] = table.columns[0][i * resolution];
  }
  for (let r = 0; r < table.rows; r++) {
    const i = Math.floor(r / resolution);
    const j = r % resolution;
    if (Math.abs(table.columns[0][r] - axis[i]) > 1e-12) {
      throw new Error("rows are not in row-major grid order");
    }
    values[i][j] = s[r];
  }
  let best: [number, number] = [0, 0];
  for (let i = 0; i < resolution; i++) {
    for (let j = 0; j < resolution; j++) {
      if (values[i][j] < values[best[0]][best[1]]) best = [i, j];
    }
  }
  return { axis, values, axes: 2, argmin: best };
}

export interface HeatmapResult {
  image: Raster;
  /** pixel coordinates of the minimum marker */
  marker: [number, number];
}

export function renderPotential(grid: PotentialGrid, cell = 3, margin = 24): HeatmapResult {
  const res = grid.axis.length;
  const size = res * cell;
  const img = new Raster(size + 2 * margin, size + 2 * margin);

  let lo = Infinity;
  let hi = -Infinity;
  const sample =
    grid.axes === 2
      ? (i: number, j: number) => grid.values[i][j]
      : // expand the slice over the torus: value at wrapped (theta_j - theta_i)
        (i: number, j: number) => grid.values[0][(((j - i) % res) + res) % res];
  for (let i = 0; i < res; i++) {
    for (let j = 0; j < res; j++) {
      const v = sample(i, j);
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  const span = hi - lo;
  for (let i = 0; i < res; i++) {
    for (let j = 0; j < res; j++) {
      const v = span > 0 ? (sample(i, j) - lo) / span : 0.5;
      // horizontal axis: first angle index i; vertical: second angle index j,
      // increasing upward
      img.fillRect(margin + i * cell, margin + (res - 1 - j) * cell, cell, cell, heatColor(v));
    }
  }
  img.line(margin - 1, margin - 1, margin + size, margin - 1, BLACK);
  img.line(margin - 1, margin - 1, margin - 1, margin + size, BLACK);
  img.line(margin + size, margin - 1, margin + size, margin + size, BLACK);
  img.line(margin - 1, margin + size, margin + size, margin + size, BLACK);

  let marker: [number, number];
  if (grid.axes === 2) {
    const [i, j] = grid.argmin;
    marker = [margin + i * cell + cell / 2, margin + (res - 1 - j) * cell + cell / 2];
  } else {
    // the minimum lies along the diagonal; mark it at first-angle index 0
    const j = grid.argmin[0];
    marker = [margin + cell / 2, margin + (res - 1 - j) * cell + cell / 2];
  }
  img.marker(marker[0], marker[1], [255, 0, 0]);
  img.text(margin, margin + size + 6, grid.axes === 2 ? "theta2 / theta3" : "theta1 / theta2");
  img.text(margin, 8, `S: ${lo.toPrecision(4)}..${hi.toPrecision(4)}`);
  return { image: img, marker };
}
