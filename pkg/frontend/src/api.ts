import type {
  QueryPayload,
  ResultPayload,
  SessionInfo,
  StatePayload,
  Verdict,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface AnswerOutcome {
  accepted: boolean;
  conflict: boolean;
}

/** Thin typed client over the session endpoints; fetch is injectable so
 * tests can run without a network. */
export class ApiClient {
  constructor(
    private base: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  private async json<T>(resp: Response, expect: number): Promise<T> {
    if (resp.status !== expect) {
      let detail = `unexpected status ${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: string };
        if (body.error) detail = body.error;
      } catch {
        // keep the generic detail
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  async createSession(payload: unknown): Promise<SessionInfo> {
    const resp = await this.fetchImpl(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return this.json<SessionInfo>(resp, 201);
  }

  async getQuery(id: string): Promise<QueryPayload> {
    const resp = await this.fetchImpl(this.url(`/sessions/${id}/query`));
    return this.json<QueryPayload>(resp, 200);
  }

  /** 409 means the query was already answered (double click, stale id);
   * that outcome is reported, not thrown, so the flow can move on. */
  async postAnswer(id: string, verdict: Verdict, queryId?: string): Promise<AnswerOutcome> {
    const resp = await this.fetchImpl(this.url(`/sessions/${id}/answer`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(queryId ? { verdict, query_id: queryId } : { verdict }),
    });
    if (resp.status === 200) return { accepted: true, conflict: false };
    if (resp.status === 409) return { accepted: false, conflict: true };
    throw new ApiError(resp.status, `answer rejected with status ${resp.status}`);
  }

  async getState(id: string): Promise<StatePayload> {
    const resp = await this.fetchImpl(this.url(`/sessions/${id}/state`));
    return this.json<StatePayload>(resp, 200);
  }

  async getResult(id: string): Promise<ResultPayload> {
    const resp = await this.fetchImpl(this.url(`/sessions/${id}/result`));
    return this.json<ResultPayload>(resp, 200);
  }

  async deleteSession(id: string): Promise<void> {
    await this.fetchImpl(this.url(`/sessions/${id}`), { method: "DELETE" });
  }
}
