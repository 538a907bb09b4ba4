/** The composer's working state.  Every edit returns a fresh draft object, so
 * saved variants can hold references without copy-on-write bookkeeping.
 *
 * Legality is enforced at the edit boundary: an attribute can only enter the
 * selection if the served taxonomy lists it for the current category's
 * garment type, and switching to a category under a different garment type
 * drops whatever just became illegal.  A draft that passes
 * ``draftViolations`` serializes to a request the service accepts.
 */

import { TaxonomyIndex } from "./taxonomy.js";
import type {
  DemographicSelection,
  ForecastRequest,
  ForecastResponse,
} from "./types.js";

export type FeatureSource = "prototype" | "features";

export interface DesignDraft {
  readonly category: string | null;
  /** Selection order preserved; drives chip and legend ordering. */
  readonly attributes: readonly string[];
  readonly demographic: DemographicSelection | null;
  /** ISO date of the week the designer targets. */
  readonly targetDate: string;
  readonly featureSource: FeatureSource;
  readonly visualFeatures: readonly number[] | null;
  readonly lastForecast: ForecastResponse | null;
  /** True once any field changed after a forecast came back. */
  readonly stale: boolean;
}

export class DraftError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DraftError";
  }
}

export function emptyDraft(targetDate: string): DesignDraft {
  return {
    category: null,
    attributes: [],
    demographic: null,
    targetDate,
    featureSource: "prototype",
    visualFeatures: null,
    lastForecast: null,
    stale: false,
  };
}

function touch(draft: DesignDraft, changes: Partial<DesignDraft>): DesignDraft {
  return { ...draft, ...changes, stale: draft.lastForecast !== null };
}

export function setCategory(
  taxonomy: TaxonomyIndex,
  draft: DesignDraft,
  category: string,
): DesignDraft {
  if (!taxonomy.hasCategory(category)) {
    throw new DraftError(`unknown category ${JSON.stringify(category)}`);
  }
  if (category === draft.category) return draft;
  const kept = draft.attributes.filter((a) => taxonomy.isLegal(category, a));
  return touch(draft, { category, attributes: kept });
}

export function toggleAttribute(
  taxonomy: TaxonomyIndex,
  draft: DesignDraft,
  attribute: string,
): DesignDraft {
  if (draft.category === null) {
    throw new DraftError("pick a category before selecting attributes");
  }
  if (draft.attributes.includes(attribute)) {
    return touch(draft, {
      attributes: draft.attributes.filter((a) => a !== attribute),
    });
  }
  if (!taxonomy.isLegal(draft.category, attribute)) {
    throw new DraftError(
      `attribute ${JSON.stringify(attribute)} is not legal for ` +
        `category ${JSON.stringify(draft.category)}`,
    );
  }
  return touch(draft, { attributes: [...draft.attributes, attribute] });
}

export function setDemographic(
  draft: DesignDraft,
  demographic: DemographicSelection | null,
): DesignDraft {
  const same =
    draft.demographic?.gender === demographic?.gender &&
    draft.demographic?.age_group === demographic?.age_group;
  if (same) return draft;
  return touch(draft, { demographic });
}

export function setTargetDate(draft: DesignDraft, iso: string): DesignDraft {
  if (!/^\d{4}-\d{2}-\d{2}$/.test(iso)) {
    throw new DraftError(`target date must be YYYY-MM-DD, got ${JSON.stringify(iso)}`);
  }
  if (iso === draft.targetDate) return draft;
  return touch(draft, { targetDate: iso });
}

export function setVisualFeatures(
  draft: DesignDraft,
  features: readonly number[] | null,
): DesignDraft {
  if (features === null) {
    if (draft.featureSource === "prototype") return draft;
    return touch(draft, { featureSource: "prototype", visualFeatures: null });
  }
  return touch(draft, {
    featureSource: "features",
    visualFeatures: [...features],
  });
}

export function withForecast(
  draft: DesignDraft,
  response: ForecastResponse,
): DesignDraft {
  return { ...draft, lastForecast: response, stale: false };
}

/** Empty list means the draft is legal to send. */
export function draftViolations(
  taxonomy: TaxonomyIndex,
  draft: DesignDraft,
): string[] {
  const problems: string[] = [];
  if (draft.category === null) {
    problems.push("no category selected");
  } else if (!taxonomy.hasCategory(draft.category)) {
    problems.push(`unknown category ${JSON.stringify(draft.category)}`);
  } else {
    for (const attribute of draft.attributes) {
      if (!taxonomy.isLegal(draft.category, attribute)) {
        problems.push(
          `attribute ${JSON.stringify(attribute)} is illegal for ` +
            `${JSON.stringify(draft.category)}`,
        );
      }
    }
  }
  if (draft.demographic === null) {
    problems.push("no demographic selected");
  }
  if (!/^\d{4}-\d{2}-\d{2}$/.test(draft.targetDate)) {
    problems.push("target date is not an ISO date");
  }
  return problems;
}

export function toForecastRequest(draft: DesignDraft): ForecastRequest {
  if (draft.category === null) {
    throw new DraftError("draft has no category; cannot build a request");
  }
  return {
    garment: {
      category: draft.category,
      attributes: [...draft.attributes],
      visual_features:
        draft.featureSource === "features" && draft.visualFeatures !== null
          ? [...draft.visualFeatures]
          : null,
      thumbnail: null,
    },
    demographic: draft.demographic ? { ...draft.demographic } : null,
    target_date: draft.targetDate,
  };
}
