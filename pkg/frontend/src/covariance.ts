/** Render a three-panel covariance comparison figure as SVG.
 *
 * Panels left to right: the true covariance, the approximation, and the
 * entrywise absolute difference.  Both covariance panels share one color
 * scale so they are directly comparable; the difference panel has its own
 * scale anchored at zero.  Axes are log-scaled when every grid coordinate
 * is positive (the natural case for log-spaced charts) and fall back to
 * linear otherwise; tick labels are written in multiples of the kernel
 * length scale rho0.
 */

import { heatColor } from "./color.js";
import { matrixRange, type MatrixData } from "./matrix.js";
import { axisTicks } from "./scale.js";
import { px, sig, svgDocument, tag, textLabel } from "./svg.js";

export interface CovarianceFigureJob {
  readonly trueMatrix: MatrixData;
  readonly approxMatrix: MatrixData;
  readonly deltaMatrix: MatrixData;
  /** Kernel length scale used as the axis unit; must be positive. */
  readonly rhoZero?: number;
  readonly title?: string;
}

const PANEL_SIZE = 230;
const MARGIN_LEFT = 70;
const MARGIN_TOP = 46;
const MARGIN_BOTTOM = 64;
const PANEL_GAP = 26;
const BAR_WIDTH = 12;
const BAR_GAP = 8;
const BAR_LABEL = 52;

interface PanelSpec {
  readonly id: string;
  readonly caption: string;
  readonly matrix: MatrixData;
  readonly lo: number;
  readonly hi: number;
}

/** Pixel edges of the heatmap cells along one axis.
 *
 * Cell i spans the midpoints between neighboring coordinates, measured in
 * log space when the axis is logarithmic, so unevenly spaced grids render
 * with their true geometry instead of as uniform pixels.
 */
function cellEdges(
  coords: readonly number[],
  mode: "log" | "linear",
  rangeLo: number,
  rangeHi: number,
): number[] {
  const fwd = mode === "log" ? Math.log : (x: number) => x;
  const t = coords.map(fwd);
  const n = t.length;
  const edges: number[] = new Array(n + 1);
  if (n === 1) {
    edges[0] = t[0]! - 0.5;
    edges[1] = t[0]! + 0.5;
  } else {
    edges[0] = t[0]! - (t[1]! - t[0]!) / 2;
    for (let i = 1; i < n; i += 1) {
      edges[i] = (t[i - 1]! + t[i]!) / 2;
    }
    edges[n] = t[n - 1]! + (t[n - 1]! - t[n - 2]!) / 2;
  }
  const lo = edges[0]!;
  const hi = edges[n]!;
  const span = hi - lo;
  return edges.map(
    (e) => rangeLo + ((e - lo) / span) * (rangeHi - rangeLo),
  );
}

/** Map one coordinate value onto the same pixel axis as `cellEdges`. */
function coordToPixel(
  value: number,
  coords: readonly number[],
  mode: "log" | "linear",
  edgesPx: readonly number[],
): number {
  const fwd = mode === "log" ? Math.log : (x: number) => x;
  const t = coords.map(fwd);
  const n = t.length;
  const lo = n === 1 ? t[0]! - 0.5 : t[0]! - (t[1]! - t[0]!) / 2;
  const hi =
    n === 1 ? t[0]! + 0.5 : t[n - 1]! + (t[n - 1]! - t[n - 2]!) / 2;
  const span = hi - lo;
  const frac = span === 0 ? 0.5 : (fwd(value) - lo) / span;
  return edgesPx[0]! + frac * (edgesPx[edgesPx.length - 1]! - edgesPx[0]!);
}

function renderPanel(
  panel: PanelSpec,
  originX: number,
  originY: number,
  mode: "log" | "linear",
  rhoZero: number,
  withYAxis: boolean,
): string {
  const coords = panel.matrix.coords;
  const edges = cellEdges(coords, mode, 0, PANEL_SIZE);
  const span = panel.hi - panel.lo;
  const parts: string[] = [];
  const cells: string[] = [];
  for (let i = 0; i < coords.length; i += 1) {
    const row = panel.matrix.values[i]!;
    const y0 = edges[i]!;
    const y1 = edges[i + 1]!;
    for (let j = 0; j < coords.length; j += 1) {
      const x0 = edges[j]!;
      const x1 = edges[j + 1]!;
      const t = span === 0 ? 0 : (row[j]! - panel.lo) / span;
      cells.push(
        tag("rect", {
          x: px(originX + x0),
          y: px(originY + y0),
          width: px(x1 - x0),
          height: px(y1 - y0),
          fill: heatColor(t),
        }),
      );
    }
  }
  parts.push(
    tag(
      "g",
      { id: `panel-${panel.id}`, "shape-rendering": "crispEdges" },
      cells.join(""),
    ),
  );
  parts.push(
    tag("rect", {
      x: px(originX),
      y: px(originY),
      width: px(PANEL_SIZE),
      height: px(PANEL_SIZE),
      fill: "none",
      stroke: "#333333",
      "stroke-width": "1",
    }),
  );
  parts.push(
    textLabel(originX + PANEL_SIZE / 2, originY - 8, panel.caption, {
      "text-anchor": "middle",
      "font-size": "12",
      fill: "#222222",
    }),
  );

  const lo = coords[0]!;
  const hi = coords[coords.length - 1]!;
  const ticks =
    coords.length === 1 ? [lo] : axisTicks(lo, hi, mode);
  for (const value of ticks) {
    const xPix = originX + (coordToPixel(value, coords, mode, edges) - edges[0]!);
    parts.push(
      tag("line", {
        x1: px(xPix),
        y1: px(originY + PANEL_SIZE),
        x2: px(xPix),
        y2: px(originY + PANEL_SIZE + 4),
        stroke: "#333333",
        "stroke-width": "1",
      }),
    );
    parts.push(
      textLabel(xPix, originY + PANEL_SIZE + 16, sig(value / rhoZero), {
        "text-anchor": "middle",
        "font-size": "9",
        fill: "#333333",
      }),
    );
    if (withYAxis) {
      const yPix = originY + (coordToPixel(value, coords, mode, edges) - edges[0]!);
      parts.push(
        tag("line", {
          x1: px(originX - 4),
          y1: px(yPix),
          x2: px(originX),
          y2: px(yPix),
          stroke: "#333333",
          "stroke-width": "1",
        }),
      );
      parts.push(
        textLabel(originX - 7, yPix + 3, sig(value / rhoZero), {
          "text-anchor": "end",
          "font-size": "9",
          fill: "#333333",
        }),
      );
    }
  }
  parts.push(
    textLabel(
      originX + PANEL_SIZE / 2,
      originY + PANEL_SIZE + 32,
      "coordinate (units of ρ₀)",
      { "text-anchor": "middle", "font-size": "10", fill: "#333333" },
    ),
  );
  return parts.join("\n");
}

function renderColorBar(
  originX: number,
  originY: number,
  lo: number,
  hi: number,
  caption: string,
): string {
  const steps = 32;
  const parts: string[] = [];
  const cells: string[] = [];
  for (let k = 0; k < steps; k += 1) {
    // Highest value at the top of the bar.
    const t = 1 - k / (steps - 1);
    const y0 = originY + (k * PANEL_SIZE) / steps;
    cells.push(
      tag("rect", {
        x: px(originX),
        y: px(y0),
        width: px(BAR_WIDTH),
        height: px(PANEL_SIZE / steps + 0.5),
        fill: heatColor(t),
      }),
    );
  }
  parts.push(tag("g", { "shape-rendering": "crispEdges" }, cells.join("")));
  parts.push(
    tag("rect", {
      x: px(originX),
      y: px(originY),
      width: px(BAR_WIDTH),
      height: px(PANEL_SIZE),
      fill: "none",
      stroke: "#333333",
      "stroke-width": "1",
    }),
  );
  parts.push(
    textLabel(originX + BAR_WIDTH + 4, originY + 8, sig(hi), {
      "font-size": "9",
      fill: "#333333",
    }),
  );
  parts.push(
    textLabel(originX + BAR_WIDTH + 4, originY + PANEL_SIZE, sig(lo), {
      "font-size": "9",
      fill: "#333333",
    }),
  );
  parts.push(
    textLabel(originX + BAR_WIDTH / 2, originY - 8, caption, {
      "text-anchor": "middle",
      "font-size": "9",
      fill: "#333333",
    }),
  );
  return parts.join("\n");
}

function checkSameShape(
  trueMatrix: MatrixData,
  other: MatrixData,
  otherName: string,
): void {
  const n = trueMatrix.coords.length;
  const m = other.coords.length;
  if (m !== n) {
    throw new Error(
      `shape mismatch: true matrix is ${n}x${n} but ${otherName} matrix is ${m}x${m}`,
    );
  }
  for (let i = 0; i < n; i += 1) {
    if (other.coords[i] !== trueMatrix.coords[i]) {
      throw new Error(
        `coordinate header of ${otherName} differs from true matrix at index ${i}`,
      );
    }
  }
}

/** Build the complete triptych SVG document. */
export function renderCovarianceFigure(job: CovarianceFigureJob): string {
  const { trueMatrix, approxMatrix, deltaMatrix } = job;
  const rhoZero = job.rhoZero ?? 1;
  if (!(rhoZero > 0) || !Number.isFinite(rhoZero)) {
    throw new Error(`rho0 must be a positive number, got ${rhoZero}`);
  }
  checkSameShape(trueMatrix, approxMatrix, "approx");
  checkSameShape(trueMatrix, deltaMatrix, "delta");

  const mode: "log" | "linear" = trueMatrix.coords.every((c) => c > 0)
    ? "log"
    : "linear";

  // One scale across both covariance panels, a zero-anchored one for |delta|.
  const trueRange = matrixRange(trueMatrix);
  const approxRange = matrixRange(approxMatrix);
  const sharedLo = Math.min(trueRange.lo, approxRange.lo);
  const sharedHi = Math.max(trueRange.hi, approxRange.hi);
  const deltaHiRaw = matrixRange(deltaMatrix).hi;
  const deltaHi = deltaHiRaw > 0 ? deltaHiRaw : 1;

  const panels: PanelSpec[] = [
    {
      id: "true",
      caption: "true covariance",
      matrix: trueMatrix,
      lo: sharedLo,
      hi: sharedHi,
    },
    {
      id: "approx",
      caption: "approximate covariance",
      matrix: approxMatrix,
      lo: sharedLo,
      hi: sharedHi,
    },
    {
      id: "delta",
      caption: "|difference|",
      matrix: deltaMatrix,
      lo: 0,
      hi: deltaHi,
    },
  ];

  const parts: string[] = [];
  let x = MARGIN_LEFT;
  const y = MARGIN_TOP;
  for (let p = 0; p < panels.length; p += 1) {
    const panel = panels[p]!;
    parts.push(renderPanel(panel, x, y, mode, rhoZero, p === 0));
    x += PANEL_SIZE;
    if (p === 1) {
      x += BAR_GAP;
      parts.push(renderColorBar(x, y, sharedLo, sharedHi, "value"));
      x += BAR_WIDTH + BAR_LABEL;
    } else if (p === 2) {
      x += BAR_GAP;
      parts.push(renderColorBar(x, y, 0, deltaHi, "|Δ|"));
      x += BAR_WIDTH + BAR_LABEL;
    } else {
      x += PANEL_GAP;
    }
  }
  const width = x + 4;
  const height = MARGIN_TOP + PANEL_SIZE + MARGIN_BOTTOM;

  const title = job.title ?? "covariance comparison";
  parts.unshift(
    textLabel(MARGIN_LEFT, 22, title, {
      "font-size": "14",
      "font-weight": "bold",
      fill: "#111111",
    }),
  );
  parts.unshift(
    tag("rect", {
      x: "0.00",
      y: "0.00",
      width: px(width),
      height: px(height),
      fill: "#ffffff",
    }),
  );
  return svgDocument(width, height, parts.join("\n"));
}
