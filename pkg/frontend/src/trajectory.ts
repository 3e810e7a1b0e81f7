/** Trajectory panel grid: one column per variable group, a full-horizon row
 * and an expanded-view row, matching the simulator's CSV schema. */

import { NumericTable, column, columnGroup } from "./csv.js";
import { BLACK, GRAY, Raster, SERIES_COLORS, WHITE } from "./raster.js";

export interface PanelSpec {
  /** variable-group column prefixes; "v_mag" derives per-bus magnitudes */
  groups?: string[];
  /** [t0, t1] full view; defaults to the whole horizon */
  timeWindow?: [number, number];
  /** [t0, t1] expanded view; defaults to the first tenth of the horizon */
  zoomWindow?: [number, number];
  panelWidth?: number;
  panelHeight?: number;
}

const DEFAULT_GROUPS = ["omega", "theta_dq", "i_r", "u_m", "v_mag"];

interface Series {
  label: string;
  values: Float64Array[];
}

function groupSeries(table: NumericTable, group: string): Series {
  if (group === "v_mag") {
    const v = columnGroup(table, "v");
    if (v.length === 0 || v.length % 2 !== 0) {
      throw new Error("missing columns: v_1..v_2n (needed for v magnitudes)");
    }
    const values: Float64Array[] = [];
    for (let bus = 0; bus < v.length / 2; bus++) {
      const mag = new Float64Array(table.rows);
      for (let r = 0; r < table.rows; r++) {
        mag[r] = Math.hypot(v[2 * bus][r], v[2 * bus + 1][r]);
      }
      values.push(mag);
    }
    return { label: "|v|", values };
  }
  const values = columnGroup(table, group);
  if (values.length === 0) {
    throw new Error(`missing columns: ${group}_1..`);
  }
  return { label: group, values };
}

function drawPanel(
  img: Raster,
  x0: number,
  y0: number,
  w: number,
  h: number,
  t: Float64Array,
  series: Series,
  window_: [number, number],
) {
  img.fillRect(x0, y0, w, h, WHITE);
  img.line(x0, y0, x0, y0 + h - 1, BLACK);
  img.line(x0, y0 + h - 1, x0 + w - 1, y0 + h - 1, BLACK);

  const [t0, t1] = window_;
  let lo = Infinity;
  let hi = -Infinity;
  for (const values of series.values) {
    for (let r = 0; r < t.length; r++) {
      if (t[r] < t0 || t[r] > t1) continue;
      lo = Math.min(lo, values[r]);
      hi = Math.max(hi, values[r]);
    }
  }
  if (!Number.isFinite(lo)) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12) {
    const pad = Math.max(1e-12, Math.abs(hi) * 1e-3 + 1e-9);
    lo -= pad;
    hi += pad;
  }
  const px = (time: number) => x0 + ((time - t0) / Math.max(t1 - t0, 1e-300)) * (w - 1);
  const py = (value: number) => y0 + (1 - (value - lo) / (hi - lo)) * (h - 1);

  if (lo < 0 && hi > 0) {
    const zero = Math.round(py(0));
    img.line(x0, zero, x0 + w - 1, zero, GRAY);
  }
  series.values.forEach((values, s) => {
    const color = SERIES_COLORS[s % SERIES_COLORS.length];
    let prev: [number, number] | null = null;
    for (let r = 0; r < t.length; r++) {
      if (t[r] < t0 || t[r] > t1) continue;
      const point: [number, number] = [px(t[r]), py(values[r])];
      if (prev) {
        img.line(prev[0], prev[1], point[0], point[1], color);
      }
      prev = point;
    }
  });
  img.text(x0 + 4, y0 + 3, series.label);
  img.text(x0 + 4, y0 + h - 11, `${t0.toPrecision(3)}..${t1.toPrecision(3)}s`);
  img.text(x0 + w - 6 * 9, y0 + 3, hi.toPrecision(3).slice(0, 8));
  img.text(x0 + w - 6 * 9, y0 + h - 11, lo.toPrecision(3).slice(0, 8));
}

export function renderTrajectory(table: NumericTable, spec: PanelSpec = {}): Raster {
  const t = column(table, "t");
  const groups = spec.groups ?? DEFAULT_GROUPS;
  const horizon: [number, number] = spec.timeWindow ?? [t[0], t[t.length - 1]];
  const zoom: [number, number] =
    spec.zoomWindow ?? [horizon[0], horizon[0] + 0.1 * (horizon[1] - horizon[0])];
  const series = groups.map((g) => groupSeries(table, g));

  const pw = spec.panelWidth ?? 260;
  const ph = spec.panelHeight ?? 170;
  const margin = 10;
  const width = margin + groups.length * (pw + margin);
  const height = margin + 2 * (ph + margin);
  const img = new Raster(width, height);
  series.forEach((s, col) => {
    const x0 = margin + col * (pw + margin);
    drawPanel(img, x0, margin, pw, ph, t, s, horizon);
    drawPanel(img, x0, 2 * margin + ph, pw, ph, t, s, zoom);
  });
  return img;
}
