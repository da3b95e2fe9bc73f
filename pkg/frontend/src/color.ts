/** A fixed perceptual colormap for heatmap panels.
 *
 * Nine anchor colors of the widely used viridis palette, interpolated
 * linearly in RGB.  The table is hard-coded so output never depends on an
 * external style source; identical inputs always map to identical colors.
 */

const ANCHORS: ReadonlyArray<readonly [number, number, number]> = [
  [68, 1, 84],
  [72, 40, 120],
  [62, 74, 137],
  [49, 104, 142],
  [38, 130, 142],
  [31, 158, 137],
  [53, 183, 121],
  [109, 205, 89],
  [180, 222, 44],
  [253, 231, 37],
];

function channelHex(value: number): string {
  const clamped = Math.max(0, Math.min(255, Math.round(value)));
  return clamped.toString(16).padStart(2, "0");
}

/** Map t in [0, 1] to a hex color; values outside are clamped. */
export function heatColor(t: number): string {
  if (!Number.isFinite(t)) {
    throw new Error(`colormap input must be finite, got ${t}`);
  }
  const clamped = Math.max(0, Math.min(1, t));
  const scaled = clamped * (ANCHORS.length - 1);
  const lower = Math.min(Math.floor(scaled), ANCHORS.length - 2);
  const frac = scaled - lower;
  const [r0, g0, b0] = ANCHORS[lower]!;
  const [r1, g1, b1] = ANCHORS[lower + 1]!;
  const r = r0 + (r1 - r0) * frac;
  const g = g0 + (g1 - g0) * frac;
  const b = b0 + (b1 - b0) * frac;
  return `#${channelHex(r)}${channelHex(g)}${channelHex(b)}`;
}

/** The color used for the lowest value on the scale. */
export function coldestColor(): string {
  return heatColor(0);
}

/** The color used for the highest value on the scale. */
export function hottestColor(): string {
  return heatColor(1);
}
