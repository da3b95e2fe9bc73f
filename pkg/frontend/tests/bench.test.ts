import { describe, expect, it } from "vitest";
import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import {
  fitSlope,
  groupBenchRows,
  parseBenchCsv,
  renderBenchFigure,
} from "../src/bench.js";
import { runBenchCli } from "../src/cli-bench.js";

const FIXTURES = fileURLToPath(new URL("./fixtures", import.meta.url));
const PACKAGE_ROOT = fileURLToPath(new URL("..", import.meta.url));

const HEADER =
  "method,n,params,build_ms,median_ms,min_ms,max_ms,threads";

interface RowSpec {
  method: string;
  n: number;
  params?: string;
  median: number;
  min?: number;
  max?: number;
}

function benchCsv(rows: readonly RowSpec[]): string {
  const lines = [HEADER];
  for (const row of rows) {
    const min = row.min ?? row.median * 0.9;
    const max = row.max ?? row.median * 1.1;
    lines.push(
      [
        row.method,
        row.n,
        row.params ?? "variant=a",
        "1.0",
        row.median,
        min,
        max,
        "1",
      ].join(","),
    );
  }
  return lines.join("\n") + "\n";
}

function countMarkers(svg: string): number {
  return [...svg.matchAll(/class="marker"/g)].length;
}

describe("bench CSV parsing", () => {
  it("round-trips a well-formed file", () => {
    const rows = parseBenchCsv(
      benchCsv([
        { method: "icr", n: 1024, median: 0.5 },
        { method: "icr", n: 2048, median: 1.0 },
      ]),
    );
    expect(rows).toHaveLength(2);
    expect(rows[0]).toMatchObject({
      method: "icr",
      n: 1024,
      params: "variant=a",
      medianMs: 0.5,
      threads: 1,
    });
  });

  it("rejects a file with no data rows", () => {
    expect(() => parseBenchCsv(HEADER + "\n")).toThrow(/no data rows/);
  });

  it("rejects a file missing a required column", () => {
    const text =
      "method,n,params,build_ms,min_ms,max_ms,threads\n" +
      "icr,1024,variant=a,1.0,0.4,0.6,1\n";
    expect(() => parseBenchCsv(text)).toThrow(/median_ms/);
  });

  it("rejects nonpositive timings, which a log axis cannot show", () => {
    const text = benchCsv([{ method: "icr", n: 1024, median: 0, min: 0 }]);
    expect(() => parseBenchCsv(text)).toThrow(/must be positive/);
  });
});

describe("slope fitting", () => {
  it("recovers the exponent of an exactly linear runtime", () => {
    // Oracle first: median_ms = 0.01 * n means log(median) = log(n) + const,
    // so the least-squares slope in log-log space is exactly 1.
    const rows = parseBenchCsv(
      benchCsv(
        [1024, 2048, 4096, 8192].map((n) => ({
          method: "icr",
          n,
          median: 0.01 * n,
        })),
      ),
    );
    const slope = fitSlope(rows);
    expect(slope).not.toBeNull();
    expect(Math.abs(slope! - 1)).toBeLessThanOrEqual(0.05);
    expect(slope!).toBeCloseTo(1, 9);

    const svg = renderBenchFigure(rows);
    expect(svg).toContain("slope ≈ 1)");
  });

  it("returns null when there are fewer than two distinct sizes", () => {
    expect(fitSlope([{ n: 1024, medianMs: 3 }])).toBeNull();
    expect(
      fitSlope([
        { n: 1024, medianMs: 3 },
        { n: 1024, medianMs: 4 },
      ]),
    ).toBeNull();
  });
});

describe("bench figure", () => {
  it("draws a single marker for a single-row file", () => {
    const rows = parseBenchCsv(benchCsv([{ method: "icr", n: 4096, median: 2 }]));
    const svg = renderBenchFigure(rows);
    expect(countMarkers(svg)).toBe(1);
    expect(svg).not.toContain("<polyline");
    expect(svg).toContain("slope n/a");
  });

  it("gives two methods distinct marker shapes", () => {
    const rows = parseBenchCsv(
      benchCsv([
        { method: "icr", n: 1024, params: "a=1", median: 0.5 },
        { method: "icr", n: 2048, params: "a=1", median: 1.0 },
        { method: "kiss", n: 1024, params: "b=2", median: 5.0 },
        { method: "kiss", n: 2048, params: "b=2", median: 20.0 },
      ]),
    );
    const svg = renderBenchFigure(rows);
    // Groups are sorted by key, so icr gets circles and kiss gets squares.
    expect([...svg.matchAll(/<circle class="marker"/g)]).toHaveLength(2);
    expect([...svg.matchAll(/<rect class="marker"/g)]).toHaveLength(2);
  });

  it("draws one min-max whisker per measurement", () => {
    const rows = parseBenchCsv(
      benchCsv([
        { method: "icr", n: 1024, median: 0.5, min: 0.4, max: 0.7 },
        { method: "icr", n: 2048, median: 1.0, min: 0.9, max: 1.4 },
        { method: "kiss", n: 1024, params: "b=2", median: 5.0 },
      ]),
    );
    const svg = renderBenchFigure(rows);
    const seriesBodies = [...svg.matchAll(/<g id="series-[^"]*">(.*?)<\/g>/gs)];
    expect(seriesBodies).toHaveLength(2);
    const whiskers = seriesBodies
      .map((m) => [...m[1]!.matchAll(/<line /g)].length)
      .reduce((a, b) => a + b, 0);
    expect(whiskers).toBe(3);
  });

  it("refuses to render an empty row list", () => {
    expect(() => renderBenchFigure([])).toThrow(/no data rows/);
  });

  it("regenerates the scaling figure from the study benchmark deterministically", () => {
    const text = readFileSync(join(FIXTURES, "bench.csv"), "utf8");
    const rows = parseBenchCsv(text);
    const groups = groupBenchRows(rows);
    expect(groups.map((g) => g.method)).toEqual(["icr", "kiss"]);

    const svg = renderBenchFigure(rows);
    expect(svg.startsWith("<svg")).toBe(true);
    expect(countMarkers(svg)).toBe(rows.length);
    expect(svg).toContain("problem size n");
    // No timestamps or other ambient state: a rerun is byte-identical.
    expect(renderBenchFigure(rows)).toBe(svg);
  });
});

describe("plot-bench command line", () => {
  it("writes an SVG file and reruns byte-identically", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotbench-"));
    const inPath = join(dir, "bench.csv");
    const outPath = join(dir, "fig.svg");
    writeFileSync(
      inPath,
      benchCsv([
        { method: "icr", n: 1024, median: 0.5 },
        { method: "icr", n: 2048, median: 1.0 },
      ]),
    );
    const argv = ["--in", inPath, "--out", outPath];
    expect(runBenchCli(argv)).toBe(0);
    const first = readFileSync(outPath, "utf8");
    expect(first.startsWith("<svg")).toBe(true);
    expect(runBenchCli(argv)).toBe(0);
    expect(readFileSync(outPath, "utf8")).toBe(first);
  });

  it("fails with a nonzero status on missing options or an empty file", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotbench-"));
    const emptyPath = join(dir, "empty.csv");
    writeFileSync(emptyPath, HEADER + "\n");
    expect(runBenchCli(["--out", join(dir, "x.svg")])).toBe(1);
    expect(
      runBenchCli(["--in", emptyPath, "--out", join(dir, "x.svg")]),
    ).toBe(1);
    expect(runBenchCli(["--nope"])).toBe(1);
  });

  it("runs as a built executable on the study benchmark", () => {
    const dir = mkdtempSync(join(tmpdir(), "plotbench-"));
    const outPath = join(dir, "fig.svg");
    const stdout = execFileSync(
      process.execPath,
      [
        join(PACKAGE_ROOT, "dist", "cli-bench.js"),
        "--in",
        join(FIXTURES, "bench.csv"),
        "--out",
        outPath,
      ],
      { encoding: "utf8" },
    );
    expect(stdout).toContain(`wrote ${outPath}`);
    expect(readFileSync(outPath, "utf8").startsWith("<svg")).toBe(true);
  });
});
