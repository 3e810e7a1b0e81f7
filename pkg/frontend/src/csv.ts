/** Minimal numeric CSV reading for the simulator's output files. */

import { readFileSync } from "node:fs";

export interface NumericTable {
  header: string[];
  /** column-major numeric data, one Float64Array per header entry */
  columns: Float64Array[];
  rows: number;
}

export function parseNumericCsv(text: string): NumericTable {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length < 2) {
    throw new Error("CSV has no data rows");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const rows = lines.length - 1;
  const columns = header.map(() => new Float64Array(rows));
  for (let r = 0; r < rows; r++) {
    const parts = lines[r + 1].split(",");
    if (parts.length !== header.length) {
      throw new Error(`row ${r + 1}: expected ${header.length} fields, got ${parts.length}`);
    }
    for (let c = 0; c < header.length; c++) {
      const value = Number(parts[c]);
      if (!Number.isFinite(value)) {
        throw new Error(`row ${r + 1}, column ${header[c]}: not a finite number`);
      }
      columns[c][r] = value;
    }
  }
  return { header, columns, rows };
}

export function readNumericCsv(path: string): NumericTable {
  return parseNumericCsv(readFileSync(path, "utf8"));
}

export function column(table: NumericTable, name: string): Float64Array {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing column ${name}`);
  }
  return table.columns[idx];
}

/** All columns matching prefix_1, prefix_2, ... in index order. */
export function columnGroup(table: NumericTable, prefix: string): Float64Array[] {
  const out: Float64Array[] = [];
  for (let i = 1; ; i++) {
    const idx = table.header.indexOf(`${prefix}_${i}`);
    if (idx < 0) break;
    out.push(table.columns[idx]);
  }
  return out;
}
