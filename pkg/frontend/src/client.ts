/** Fetch-based transport for the prediction server. */

import {
  ServerError,
  type BackendsResponse,
  type ErrorBody,
  type PredictRequestBody,
  type PredictResponseBody,
} from "./types.js";

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  async predict(body: PredictRequestBody): Promise<PredictResponseBody> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      let kind = `http_${resp.status}`;
      let message = resp.statusText;
      try {
        const doc = (await resp.json()) as ErrorBody;
        kind = doc.error.kind;
        message = doc.error.message;
      } catch {
        // non-JSON error body; keep the HTTP status text
      }
      throw new ServerError(resp.status, kind, message);
    }
    return (await resp.json()) as PredictResponseBody;
  }

  async backends(): Promise<BackendsResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/backends`);
    if (!resp.ok) {
      throw new ServerError(resp.status, `http_${resp.status}`, resp.statusText);
    }
    return (await resp.json()) as BackendsResponse;
  }
}
