/** Wire types for the garmentcast HTTP service. */

export interface TaxonomyCategory {
  name: string;
  parent: string;
}

export interface TaxonomyAttribute {
  name: string;
  legal_types: string[];
}

export interface TaxonomyPayload {
  taxonomy: {
    garment_types: string[];
    categories: TaxonomyCategory[];
    attributes: TaxonomyAttribute[];
  };
  hash: string;
  indices: {
    garment_types: Record<string, number>;
    categories: Record<string, number>;
    attributes: Record<string, number>;
  };
}

export interface DemographicSelection {
  gender: string;
  age_group: string;
}

export interface GarmentPayload {
  category: string;
  attributes: string[];
  visual_features?: number[] | null;
  thumbnail?: string | null;
}

export interface ForecastRequest {
  garment: GarmentPayload;
  demographic: DemographicSelection | null;
  target_date: string;
  horizon?: number | null;
}

export interface ForecastResponse {
  popularity: number[];
  model_version: string;
  used_feature_source: string;
  per_attribute_context: Record<string, number[]>;
}

/** [iso_year, iso_week, mean_popularity, record_count] */
export type TrendWeekRow = [number, number, number, number];

export interface TrendSeriesPayload {
  attribute: string;
  weeks: TrendWeekRow[];
}

export interface HealthPayload {
  model_version: string | null;
  taxonomy_hash: string;
  weeks_loaded: number;
}

export interface ActivatePayload {
  model_version: string;
  taxonomy_hash: string;
}

export interface ErrorPayload {
  error: string;
  violations?: string[];
  available?: string[];
}

export const GENDERS = ["men", "women"] as const;

export const AGE_GROUPS = [
  "<18",
  "18-25",
  "25-30",
  "30-35",
  "35-45",
  "45-55",
  ">55",
] as const;
