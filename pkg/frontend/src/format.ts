/** Display formatting.  Every rendered number passes through exactly one of
 * these, so tests can assert byte-equality between screen text and API data.
 */

/** 0.83 -> "83%"; rounds to the nearest whole percent. */
export function formatPercent(score: number): string {
  return `${Math.round(score * 100)}%`;
}

/** Fixed-decimal rendering for series values and score columns. */
export function formatScore(value: number, decimals = 4): string {
  return value.toFixed(decimals);
}
