#!/usr/bin/env node
/** plotkit: render simulator CSVs to PNG figures.
 *
 *   plotkit trajectory CSV_PATH --out DIR [--zoom T0,T1]
 *   plotkit potential CSV_PATH --out DIR
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";

import { readNumericCsv } from "./csv.js";
import { encodePng } from "./png.js";
import { parseScan, renderPotential } from "./potential.js";
import { PanelSpec, renderTrajectory } from "./trajectory.js";

interface Args {
  command: string;
  csvPath: string;
  outDir: string;
  zoom?: [number, number];
}

function parseArgs(argv: string[]): Args {
  const positional: string[] = [];
  let outDir = ".";
  let zoom: [number, number] | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--out") {
      outDir = argv[++i];
    } else if (arg === "--zoom") {
      const parts = argv[++i].split(",").map(Number);
      if (parts.length !== 2 || parts.some((p) => !Number.isFinite(p))) {
        throw new Error("--zoom expects T0,T1");
      }
      zoom = [parts[0], parts[1]];
    } else if (arg.startsWith("--")) {
      throw new Error(`unknown flag ${arg}`);
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2 || !["trajectory", "potential"].includes(positional[0])) {
    throw new Error("usage: plotkit <trajectory|potential> CSV_PATH --out DIR");
  }
  return { command: positional[0], csvPath: positional[1], outDir, zoom };
}

function stem(path: string): string {
  return basename(path).replace(/\.[^.]*$/, "");
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    mkdirSync(args.outDir, { recursive: true });
    const table = readNumericCsv(args.csvPath);
    if (args.command === "trajectory") {
      const spec: PanelSpec = {};
      if (args.zoom) spec.zoomWindow = args.zoom;
      const img = renderTrajectory(table, spec);
      const out = join(args.outDir, `${stem(args.csvPath)}_panels.png`);
      writeFileSync(out, encodePng(img.width, img.height, img.data));
      console.log(out);
    } else {
      const { image, marker } = renderPotential(parseScan(table));
      const out = join(args.outDir, `${stem(args.csvPath)}_heatmap.png`);
      writeFileSync(out, encodePng(image.width, image.height, image.data));
      console.log(out);
      console.log(`marker: ${marker[0]},${marker[1]}`);
    }
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  (import.meta.url.endsWith(basename(process.argv[1])) || process.argv[1].endsWith("plotkit"));
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
