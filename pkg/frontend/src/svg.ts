/** Small helpers for building deterministic SVG documents as strings.
 *
 * Every numeric attribute goes through a fixed-width formatter so that a
 * rerun on identical inputs produces byte-identical output.  Nothing here
 * reads the clock or any other ambient state.
 */

/** Escape a string for use inside SVG text content or attribute values. */
export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Format a pixel coordinate with two fixed decimals ("12.50"). */
export function px(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`non-finite pixel coordinate: ${value}`);
  }
  // Avoid "-0.00": normalise negative zero before formatting.
  const v = Object.is(value, -0) ? 0 : value;
  return v.toFixed(2);
}

/** Format a data value with `sig` significant digits, trimming noise.
 *
 * Mimics printf "%g": plain decimal notation in a comfortable range,
 * exponent notation outside it, trailing zeros removed.
 */
export function sig(value: number, digits = 3): string {
  if (!Number.isFinite(value)) {
    return String(value);
  }
  if (value === 0) {
    return "0";
  }
  const magnitude = Math.abs(value);
  if (magnitude >= 1e-4 && magnitude < 1e6) {
    const text = value.toPrecision(digits);
    // Strip trailing zeros after a decimal point ("1.50" -> "1.5").
    return text.includes(".") ? text.replace(/\.?0+$/, "") : text;
  }
  const [mantissa, exponent] = value.toExponential(digits - 1).split("e") as [
    string,
    string,
  ];
  const trimmed = mantissa.includes(".")
    ? mantissa.replace(/\.?0+$/, "")
    : mantissa;
  return `${trimmed}e${exponent}`;
}

/** Build one SVG element as a string: tag("rect", {x: "0"}) -> <rect x="0"/>. */
export function tag(
  name: string,
  attrs: Record<string, string>,
  children?: string,
): string {
  const parts = Object.entries(attrs)
    .map(([key, value]) => `${key}="${value}"`)
    .join(" ");
  const open = parts.length > 0 ? `<${name} ${parts}` : `<${name}`;
  if (children === undefined) {
    return `${open}/>`;
  }
  return `${open}>${children}</${name}>`;
}

/** A text label; content is escaped, position fixed-format. */
export function textLabel(
  x: number,
  y: number,
  content: string,
  attrs: Record<string, string> = {},
): string {
  return tag(
    "text",
    { x: px(x), y: px(y), ...attrs },
    escapeXml(content),
  );
}

/** Wrap rendered body in a complete standalone SVG document. */
export function svgDocument(
  width: number,
  height: number,
  body: string,
): string {
  const header =
    `<svg xmlns="http://www.w3.org/2000/svg" ` +
    `width="${px(width)}" height="${px(height)}" ` +
    `viewBox="0 0 ${px(width)} ${px(height)}" ` +
    `font-family="Helvetica, Arial, sans-serif">`;
  return `${header}\n${body}\n</svg>\n`;
}
