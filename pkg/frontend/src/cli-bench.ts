#!/usr/bin/env node
/** Command-line entry: render a runtime-scaling benchmark figure.
 *
 * Usage:
 *   plot-bench --in bench.csv --out fig.svg [--title "..."]
 */

import { readFileSync, writeFileSync, realpathSync } from "node:fs";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";
import { parseBenchCsv, renderBenchFigure } from "./bench.js";

export function runBenchCli(argv: readonly string[]): number {
  try {
    const { values } = parseArgs({
      args: [...argv],
      options: {
        in: { type: "string" },
        out: { type: "string" },
        title: { type: "string" },
      },
      strict: true,
    });
    for (const required of ["in", "out"] as const) {
      if (values[required] === undefined) {
        throw new Error(`missing required option --${required}`);
      }
    }
    const rows = parseBenchCsv(readFileSync(values.in!, "utf8"));
    const svg = renderBenchFigure(
      rows,
      values.title !== undefined ? { title: values.title } : {},
    );
    writeFileSync(values.out!, svg, "utf8");
    console.log(`wrote ${values.out}`);
    return 0;
  } catch (error) {
    console.error(`error: ${error instanceof Error ? error.message : error}`);
    return 1;
  }
}

const entryPath = process.argv[1];
if (
  entryPath !== undefined &&
  import.meta.url === pathToFileURL(realpathSync(entryPath)).href
) {
  process.exit(runBenchCli(process.argv.slice(2)));
}
