/** Thin typed client for the forecast service.  Configuration is the base URL. */

import type {
  ActivatePayload,
  ErrorPayload,
  ForecastRequest,
  ForecastResponse,
  HealthPayload,
  TaxonomyPayload,
  TrendSeriesPayload,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly payload: ErrorPayload;

  constructor(status: number, payload: ErrorPayload) {
    super(payload.error ?? `request failed with status ${status}`);
    this.name = "ApiError";
    this.status = status;
    this.payload = payload;
  }

  get violations(): string[] {
    return this.payload.violations ?? [];
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export interface ClientOptions {
  baseUrl: string;
  fetchFn?: FetchLike;
}

export interface TrendQuery {
  from?: string;
  to?: string;
  gender?: string;
  age_group?: string;
}

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(options: ClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, "");
    this.fetchFn = options.fetchFn ?? ((input, init) => fetch(input, init));
  }

  async taxonomy(): Promise<TaxonomyPayload> {
    return this.request<TaxonomyPayload>("GET", "/v1/taxonomy");
  }

  async forecast(
    body: ForecastRequest,
    signal?: AbortSignal,
  ): Promise<ForecastResponse> {
    return this.request<ForecastResponse>("POST", "/v1/forecast", {
      body,
      signal,
    });
  }

  async trends(
    attribute: string,
    query: TrendQuery = {},
  ): Promise<TrendSeriesPayload> {
    return this.request<TrendSeriesPayload>(
      "GET",
      `/v1/trends/${encodeURIComponent(attribute)}`,
      { query: query as Record<string, string | undefined> },
    );
  }

  async activate(version: string): Promise<ActivatePayload> {
    return this.request<ActivatePayload>("POST", "/v1/models/activate", {
      body: { version },
    });
  }

  async health(): Promise<HealthPayload> {
    return this.request<HealthPayload>("GET", "/healthz");
  }

  private async request<T>(
    method: string,
    path: string,
    options: {
      body?: unknown;
      query?: Record<string, string | undefined>;
      signal?: AbortSignal;
    } = {},
  ): Promise<T> {
    let url = this.baseUrl + path;
    if (options.query) {
      const params = new URLSearchParams();
      for (const [key, value] of Object.entries(options.query)) {
        if (value !== undefined) params.set(key, value);
      }
      const suffix = params.toString();
      if (suffix) url += "?" + suffix;
    }
    const init: RequestInit = { method, signal: options.signal };
    if (options.body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(options.body);
    }
    const response = await this.fetchFn(url, init);
    const text = await response.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = { error: text };
      }
    }
    if (!response.ok) {
      throw new ApiError(response.status, (payload ?? {}) as ErrorPayload);
    }
    return payload as T;
  }
}
