#!/usr/bin/env node
/** Command-line entry: render a covariance comparison triptych.
 *
 * Usage:
 *   plot-covariance --true A.csv --approx B.csv --delta C.csv --out fig.svg
 *                   [--rho 1.0] [--title "..."]
 */

import { readFileSync, writeFileSync, realpathSync } from "node:fs";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";
import { parseMatrixCsv } from "./matrix.js";
import { renderCovarianceFigure } from "./covariance.js";

export function runCovarianceCli(argv: readonly string[]): number {
  try {
    const { values } = parseArgs({
      args: [...argv],
      options: {
        true: { type: "string" },
        approx: { type: "string" },
        delta: { type: "string" },
        out: { type: "string" },
        rho: { type: "string", default: "1.0" },
        title: { type: "string" },
      },
      strict: true,
    });
    for (const required of ["true", "approx", "delta", "out"] as const) {
      if (values[required] === undefined) {
        throw new Error(`missing required option --${required}`);
      }
    }
    const rhoZero = Number(values.rho);
    if (!Number.isFinite(rhoZero) || !(rhoZero > 0)) {
      throw new Error(`--rho must be a positive number, got '${values.rho}'`);
    }
    const svg = renderCovarianceFigure({
      trueMatrix: parseMatrixCsv(readFileSync(values.true!, "utf8"), "true"),
      approxMatrix: parseMatrixCsv(
        readFileSync(values.approx!, "utf8"),
        "approx",
      ),
      deltaMatrix: parseMatrixCsv(readFileSync(values.delta!, "utf8"), "delta"),
      rhoZero,
      ...(values.title !== undefined ? { title: values.title } : {}),
    });
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
  process.exit(runCovarianceCli(process.argv.slice(2)));
}
