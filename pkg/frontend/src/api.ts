// Thin fetch client for the answer service. Errors are normalized into
// ServiceError objects carrying the failing leg when the backend names one.

import type {
  AbstractResponse,
  AnswerResponse,
  HealthResponse,
  SearchResponse,
  ServiceError,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly leg?: string;

  constructor(err: ServiceError) {
    super(err.message);
    this.status = err.status;
    this.leg = err.leg;
  }
}

async function toError(resp: Response): Promise<ApiError> {
  let message = `${resp.status} ${resp.statusText}`;
  let leg: string | undefined;
  try {
    const body = (await resp.json()) as Record<string, unknown>;
    if (typeof body.error === "string") message = body.error;
    if (typeof body.leg === "string") leg = body.leg;
    if (Array.isArray(body.fields)) {
      const details = body.fields
        .map((f) => `${(f as Record<string, string>).field}: ${(f as Record<string, string>).message}`)
        .join("; ");
      if (details) message = `${message} (${details})`;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError({ status: resp.status, message, leg });
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await toError(resp);
    return (await resp.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.url(path));
    if (!resp.ok) throw await toError(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.get("/healthz");
  }

  answer(question: string, k: number, wLex: number, wSem: number): Promise<AnswerResponse> {
    return this.post("/answer", { question, k, w_lex: wLex, w_sem: wSem });
  }

  search(query: string, k: number, wLex: number, wSem: number): Promise<SearchResponse> {
    return this.post("/search", { query, k, w_lex: wLex, w_sem: wSem });
  }

  abstract(pmid: string): Promise<AbstractResponse> {
    return this.get(`/abstract/${encodeURIComponent(pmid)}`);
  }
}
