/**
 * Histogram text rendering, digit-for-digit identical to the engine's log
 * output. The engine formats percentages with 3 significant digits, never in
 * scientific notation, and rounds ties to even; JavaScript's toPrecision and
 * Math.round both round ties upward, so the rounding is done on the exact
 * digit expansion instead.
 */

export const BAR_UNIT = 7.5;
export const MAX_BAR = 13;

/** Round to the nearest integer, ties to even (matching the engine). */
export function roundHalfEven(x: number): number {
  const floor = Math.floor(x);
  const diff = x - floor;
  if (diff === 0.5) {
    return floor % 2 === 0 ? floor : floor + 1;
  }
  return Math.round(x);
}

/**
 * Format x with 3 significant digits, ties to even, positional notation,
 * trailing zeros stripped. Mirrors the engine's handling of values like
 * 11.25 -> "11.2" and 0.00005 -> "0.00005".
 */
export function formatSig3(x: number): string {
  if (x === 0) return "0";
  if (!isFinite(x)) return String(x);
  const negative = x < 0;
  const exp = x === 0 ? 0 : Number(Math.abs(x).toExponential(19).split("e")[1]);
  const mantissa = Math.abs(x).toExponential(19).split("e")[0].replace(".", "");
  // mantissa now holds 20 significant digits; adjacent doubles differ within
  // the first 17, so tie detection below sees the exact value's direction
  const digits = mantissa.split("").map(Number);
  let head = digits.slice(0, 3);
  const nextDigit = digits[3] ?? 0;
  const rest = digits.slice(4);
  let roundUp = false;
  if (nextDigit > 5) roundUp = true;
  else if (nextDigit === 5) {
    if (rest.some((d) => d !== 0)) roundUp = true;
    else roundUp = head[2] % 2 === 1; // exact tie: round to even
  }
  let exponent = exp;
  if (roundUp) {
    let i = 2;
    while (i >= 0) {
      head[i] += 1;
      if (head[i] < 10) break;
      head[i] = 0;
      i -= 1;
    }
    if (i < 0) {
      head = [1, 0, 0];
      exponent += 1;
    }
  }
  let out: string;
  if (exponent >= 2) {
    out = head.join("") + "0".repeat(exponent - 2);
  } else if (exponent === 1) {
    out = `${head[0]}${head[1]}.${head[2]}`;
  } else if (exponent === 0) {
    out = `${head[0]}.${head[1]}${head[2]}`;
  } else {
    out = "0." + "0".repeat(-exponent - 1) + head.join("");
  }
  if (out.includes(".")) {
    out = out.replace(/0+$/, "").replace(/\.$/, "");
  }
  return negative ? `-${out}` : out;
}

export function formatPercent(weight: number): string {
  return formatSig3(weight * 100);
}

export function barFor(weight: number): string {
  const percent = weight * 100;
  const length = Math.max(1, Math.min(MAX_BAR, roundHalfEven(percent / BAR_UNIT)));
  return "#".repeat(length);
}

export function histogramLine(name: string, weight: number): string {
  return `${name} ${formatPercent(weight)}% ${barFor(weight)}`;
}

/** Render a weight map exactly as the engine's histogram block body. */
export function histogramLines(weights: Record<string, number>): string[] {
  return Object.entries(weights)
    .filter(([, w]) => w > 0)
    .map(([name, w]) => histogramLine(name, w));
}
