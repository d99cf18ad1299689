import type {
  HealthDoc,
  Resolution,
  SchedulePayload,
  SubmitBody,
  SwapRequest,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorType: string,
    detail: string,
  ) {
    super(`${errorType}: ${detail}`);
  }
}

async function asApiError(res: Response): Promise<ApiError> {
  let errorType = "HttpError";
  let detail = res.statusText;
  try {
    const body = (await res.json()) as { error?: string; detail?: string };
    if (body.error) errorType = body.error;
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, errorType, detail);
}

export class OpsClient {
  // The default wraps fetch in a closure: browsers reject a bare `fetch`
  // reference invoked with a foreign `this`.
  constructor(
    private readonly base = "",
    private readonly fetchFn: typeof fetch = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.base}${path}`, init);
    if (!res.ok) throw await asApiError(res);
    return (await res.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? "{}" : JSON.stringify(body),
    });
  }

  health(): Promise<HealthDoc> {
    return this.request("/api/health");
  }

  listRequests(state?: string): Promise<SwapRequest[]> {
    const q = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request(`/api/swap-requests${q}`);
  }

  submitRequest(body: SubmitBody): Promise<SwapRequest> {
    return this.post("/api/swap-requests", body);
  }

  claim(id: string): Promise<SwapRequest> {
    return this.post(`/api/swap-requests/${id}/claim`);
  }

  resolve(id: string, resolution: Resolution): Promise<SwapRequest> {
    return this.post(`/api/swap-requests/${id}/resolve`, { resolution });
  }

  escalate(id: string): Promise<SwapRequest> {
    return this.post(`/api/swap-requests/${id}/escalate`);
  }

  candidates(id: string): Promise<string[]> {
    return this.request<{ candidates: string[] }>(
      `/api/swap-requests/${id}/candidates`,
    ).then((doc) => doc.candidates);
  }

  schedule(week: string): Promise<SchedulePayload> {
    return this.request(`/api/schedule?week=${week}`);
  }
}
