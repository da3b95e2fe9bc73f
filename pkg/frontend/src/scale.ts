/** Axis scales: map data coordinates to pixel positions, pick tick values. */

export interface Scale {
  /** Map a data value to a pixel position inside [rangeLo, rangeHi]. */
  apply(value: number): number;
  readonly kind: "log" | "linear";
  readonly domainLo: number;
  readonly domainHi: number;
}

function makeScale(
  kind: "log" | "linear",
  domainLo: number,
  domainHi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  const fwd = kind === "log" ? Math.log : (x: number) => x;
  const lo = fwd(domainLo);
  const hi = fwd(domainHi);
  const span = hi - lo;
  return {
    kind,
    domainLo,
    domainHi,
    apply(value: number): number {
      if (span === 0) {
        return (rangeLo + rangeHi) / 2;
      }
      return rangeLo + ((fwd(value) - lo) / span) * (rangeHi - rangeLo);
    },
  };
}

/** A log scale over [domainLo, domainHi]; requires strictly positive bounds. */
export function logScale(
  domainLo: number,
  domainHi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  if (!(domainLo > 0) || !(domainHi > 0)) {
    throw new Error(
      `log scale needs positive bounds, got [${domainLo}, ${domainHi}]`,
    );
  }
  return makeScale("log", domainLo, domainHi, rangeLo, rangeHi);
}

/** A plain linear scale over [domainLo, domainHi]. */
export function linearScale(
  domainLo: number,
  domainHi: number,
  rangeLo: number,
  rangeHi: number,
): Scale {
  return makeScale("linear", domainLo, domainHi, rangeLo, rangeHi);
}

/** Powers of ten falling inside [lo, hi] (inclusive), e.g. 0.1, 1, 10. */
export function decadeTicks(lo: number, hi: number): number[] {
  if (!(lo > 0) || !(hi >= lo)) {
    return [];
  }
  const ticks: number[] = [];
  const first = Math.ceil(Math.log10(lo) - 1e-12);
  const last = Math.floor(Math.log10(hi) + 1e-12);
  for (let exp = first; exp <= last; exp += 1) {
    ticks.push(10 ** exp);
  }
  return ticks;
}

/** Ticks for an axis: interior decades plus both endpoints, deduplicated.
 *
 * Endpoints are always shown so short ranges (less than one decade) still
 * get labeled; interior decades give the familiar log-axis rhythm.
 */
export function axisTicks(lo: number, hi: number, kind: "log" | "linear"): number[] {
  if (kind === "linear") {
    const count = 5;
    const ticks: number[] = [];
    for (let i = 0; i < count; i += 1) {
      ticks.push(lo + ((hi - lo) * i) / (count - 1));
    }
    return ticks;
  }
  const ticks = [lo, ...decadeTicks(lo, hi), hi];
  const unique: number[] = [];
  for (const t of ticks.sort((a, b) => a - b)) {
    const prev = unique[unique.length - 1];
    // Drop ticks that would collide visually with the previous one.
    if (prev === undefined || Math.log(t) - Math.log(prev) > 0.05) {
      unique.push(t);
    }
  }
  return unique;
}
