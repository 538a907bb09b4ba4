/** Single-in-flight forecast dispatcher.
 *
 * The composer is single-user: a new submission aborts whatever is still in
 * the air, and a response that lands after it was superseded is dropped
 * instead of overwriting newer state.
 */

import { ApiClient, ApiError } from "./api.js";
import type { ForecastRequest, ForecastResponse } from "./types.js";

export type ForecastOutcome =
  | { kind: "success"; response: ForecastResponse }
  | { kind: "api-error"; status: number; message: string; violations: string[] }
  | { kind: "superseded" }
  | { kind: "network-error"; message: string };

export class ForecastController {
  private readonly client: ApiClient;
  private epoch = 0;
  private inflight: AbortController | null = null;

  constructor(client: ApiClient) {
    this.client = client;
  }

  get busy(): boolean {
    return this.inflight !== null;
  }

  cancel(): void {
    this.epoch += 1;
    this.inflight?.abort();
    this.inflight = null;
  }

  async submit(request: ForecastRequest): Promise<ForecastOutcome> {
    this.epoch += 1;
    const mine = this.epoch;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await this.client.forecast(request, controller.signal);
      if (mine !== this.epoch) return { kind: "superseded" };
      this.inflight = null;
      return { kind: "success", response };
    } catch (error) {
      if (mine !== this.epoch) return { kind: "superseded" };
      this.inflight = null;
      if (error instanceof ApiError) {
        return {
          kind: "api-error",
          status: error.status,
          message: error.payload.error ?? error.message,
          violations: error.violations,
        };
      }
      if (error instanceof Error && error.name === "AbortError") {
        return { kind: "superseded" };
      }
      const message = error instanceof Error ? error.message : String(error);
      return { kind: "network-error", message };
    }
  }
}
