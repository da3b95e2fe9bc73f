/** Reading the covariance-matrix CSV format written by the icrgp CLI.
 *
 * Layout: the first row holds the modeled coordinate of every grid point,
 * the remaining rows are the square matrix itself, one row per grid point.
 */

import Papa from "papaparse";

export interface MatrixData {
  /** Modeled coordinate of each grid point (length n). */
  readonly coords: readonly number[];
  /** Matrix entries, row-major, n rows of n values. */
  readonly values: ReadonlyArray<readonly number[]>;
}

/** Parse matrix CSV text; throws with a descriptive message on bad input. */
export function parseMatrixCsv(text: string, label = "matrix"): MatrixData {
  const parsed = Papa.parse<string[]>(text.trim(), {
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new Error(`${label} CSV parse error: ${first.message}`);
  }
  const rows = parsed.data;
  if (rows.length < 2) {
    throw new Error(
      `${label} CSV needs a coordinate header plus matrix rows, got ${rows.length} row(s)`,
    );
  }
  const coords = rows[0]!.map((cell, j) => {
    const value = Number(cell);
    if (!Number.isFinite(value)) {
      throw new Error(
        `${label} CSV header entry ${j} is not a finite coordinate: '${cell}'`,
      );
    }
    return value;
  });
  const n = coords.length;
  const body = rows.slice(1);
  if (body.length !== n) {
    throw new Error(
      `${label} CSV is not square: header lists ${n} coordinates but there are ${body.length} matrix rows`,
    );
  }
  const values = body.map((row, i) => {
    if (row.length !== n) {
      throw new Error(
        `${label} CSV row ${i} has ${row.length} entries, expected ${n}`,
      );
    }
    return row.map((cell, j) => {
      const value = Number(cell);
      if (!Number.isFinite(value)) {
        throw new Error(
          `${label} CSV entry (${i}, ${j}) is not finite: '${cell}'`,
        );
      }
      return value;
    });
  });
  return { coords, values };
}

/** Smallest and largest entry of a matrix. */
export function matrixRange(matrix: MatrixData): { lo: number; hi: number } {
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of matrix.values) {
    for (const value of row) {
      if (value < lo) lo = value;
      if (value > hi) hi = value;
    }
  }
  return { lo, hi };
}
