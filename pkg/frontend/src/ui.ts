/** View-model builders: pure projections from state to what the DOM shows.
 * Keeping these out of app.ts lets tests assert on rendered text without a
 * browser.
 */

import { formatPercent, formatScore } from "./format.js";
import type { DesignDraft } from "./draft.js";
import type { ForecastOutcome } from "./forecast.js";
import { TaxonomyIndex } from "./taxonomy.js";
import type { ForecastResponse } from "./types.js";

export const GAUGE_LABEL = "Popularity Score";

export interface GaugeView {
  label: string;
  /** First-step popularity as a whole percentage, e.g. "83%". */
  text: string;
  score: number;
}

export function gaugeView(response: ForecastResponse): GaugeView {
  const score = response.popularity[0] ?? 0;
  return { label: GAUGE_LABEL, text: formatPercent(score), score };
}

export interface HorizonPoint {
  step: number;
  score: number;
  text: string;
}

/** Full multi-week forecast line, one point per horizon step. */
export function horizonView(response: ForecastResponse): HorizonPoint[] {
  return response.popularity.map((score, i) => ({
    step: i + 1,
    score,
    text: formatScore(score),
  }));
}

export interface ErrorView {
  message: string;
  violations: string[];
}

export function errorView(outcome: ForecastOutcome): ErrorView | null {
  if (outcome.kind === "api-error") {
    const message =
      outcome.status === 422
        ? `No trend history covers this request: ${outcome.message}`
        : outcome.message;
    return { message, violations: outcome.violations };
  }
  if (outcome.kind === "network-error") {
    return { message: outcome.message, violations: [] };
  }
  return null;
}

export interface ChipView {
  attribute: string;
  selected: boolean;
  enabled: boolean;
}

/** One chip per attribute; illegal ones render disabled, never hidden. */
export function attributeChips(
  taxonomy: TaxonomyIndex,
  draft: DesignDraft,
): ChipView[] {
  return taxonomy.attributes().map((attribute) => ({
    attribute,
    selected: draft.attributes.includes(attribute),
    enabled:
      draft.category !== null && taxonomy.isLegal(draft.category, attribute),
  }));
}
