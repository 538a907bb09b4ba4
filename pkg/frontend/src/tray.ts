/** Variant tray: ordered, immutable snapshots of forecasted drafts.
 *
 * Saving deep-freezes a copy of the draft and its response, so later edits in
 * the composer can never reach back into a saved entry.  Restoring hands out
 * a fresh mutable-safe copy.  Duplicate saves (same request-relevant fields
 * and same response) are collapsed into the existing entry with a notice.
 */

import type { DesignDraft } from "./draft.js";
import type { ForecastResponse } from "./types.js";

export interface Variant {
  readonly id: number;
  readonly label: string;
  readonly draft: DesignDraft;
  readonly response: ForecastResponse;
  readonly order: number;
}

export interface TrayState {
  readonly variants: readonly Variant[];
  readonly sortByScore: boolean;
  readonly nextId: number;
}

export interface SaveResult {
  tray: TrayState;
  variant: Variant;
  notice: string | null;
}

export function emptyTray(): TrayState {
  return { variants: [], sortByScore: false, nextId: 1 };
}

export function headlineScore(variant: Variant): number {
  return variant.response.popularity[0] ?? NaN;
}

function deepFreeze<T>(value: T): T {
  if (value !== null && typeof value === "object" && !Object.isFrozen(value)) {
    Object.freeze(value);
    for (const key of Object.keys(value as object)) {
      deepFreeze((value as Record<string, unknown>)[key]);
    }
  }
  return value;
}

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

/** Request-relevant identity: selection order is presentation, not identity. */
function signature(draft: DesignDraft, response: ForecastResponse): string {
  return JSON.stringify({
    category: draft.category,
    attributes: [...draft.attributes].sort(),
    demographic: draft.demographic,
    targetDate: draft.targetDate,
    featureSource: draft.featureSource,
    visualFeatures: draft.visualFeatures,
    response,
  });
}

export function saveVariant(
  tray: TrayState,
  draft: DesignDraft,
  response: ForecastResponse,
): SaveResult {
  const key = signature(draft, response);
  for (const existing of tray.variants) {
    if (signature(existing.draft, existing.response) === key) {
      return {
        tray,
        variant: existing,
        notice: `already saved as ${existing.label}`,
      };
    }
  }
  const snapshot = deepFreeze(
    clone({ ...draft, lastForecast: response, stale: false }),
  ) as DesignDraft;
  const variant: Variant = deepFreeze({
    id: tray.nextId,
    label: `Variant ${tray.nextId}`,
    draft: snapshot,
    response: deepFreeze(clone(response)),
    order: tray.variants.length,
  });
  return {
    tray: {
      variants: [...tray.variants, variant],
      sortByScore: tray.sortByScore,
      nextId: tray.nextId + 1,
    },
    variant,
    notice: null,
  };
}

export function restoreVariant(tray: TrayState, id: number): DesignDraft {
  const variant = tray.variants.find((v) => v.id === id);
  if (variant === undefined) {
    throw new Error(`no variant with id ${id}`);
  }
  return clone(variant.draft);
}

export function toggleSort(tray: TrayState): TrayState {
  return { ...tray, sortByScore: !tray.sortByScore };
}

/** Insertion order, or headline score descending when the toggle is on. */
export function trayView(tray: TrayState): Variant[] {
  const out = [...tray.variants];
  if (tray.sortByScore) {
    out.sort((a, b) => headlineScore(b) - headlineScore(a) || a.order - b.order);
  }
  return out;
}
