import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import type { QueryPayload, ResultPayload, StatePayload, Verdict } from "./types.js";

export interface FlowCallbacks {
  onQuery(query: QueryPayload): void;
  onState(state: StatePayload): void;
  onFinished(result: ResultPayload): void;
  onError(message: string): void;
}

export interface FlowOptions {
  pollMs?: number;
  maxPollMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/** Drives one session: polls for queries and state, surfaces them to the
 * UI, posts answers exactly once per query, and backs off exponentially on
 * server errors. */
export class SessionFlow {
  private running = false;
  private delay: number;
  private readonly pollMs: number;
  private readonly maxPollMs: number;
  private readonly sleep: (ms: number) => Promise<void>;
  private currentQueryId: string | null = null;
  private answerInFlight = false;

  constructor(
    private api: ApiClient,
    private sessionId: string,
    private callbacks: FlowCallbacks,
    options: FlowOptions = {},
  ) {
    this.pollMs = options.pollMs ?? 500;
    this.maxPollMs = options.maxPollMs ?? 5000;
    this.sleep = options.sleep ?? defaultSleep;
    this.delay = this.pollMs;
  }

  stop(): void {
    this.running = false;
  }

  /** One poll cycle; returns false once the session has finished. */
  async tick(): Promise<boolean> {
    let query: QueryPayload;
    try {
      query = await this.api.getQuery(this.sessionId);
      const state = await this.api.getState(this.sessionId);
      this.callbacks.onState(state);
      this.delay = this.pollMs;

      if (query.pending && query.query_id) {
        if (query.query_id !== this.currentQueryId) {
          this.currentQueryId = query.query_id;
          this.answerInFlight = false;
          this.callbacks.onQuery(query);
        }
        return true;
      }
      if (state.state === "finished") {
        const result = await this.api.getResult(this.sessionId);
        this.callbacks.onFinished(result);
        return false;
      }
      if (state.state === "failed") {
        this.callbacks.onError(state.error ?? "run failed");
        return false;
      }
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status >= 500) {
        this.delay = Math.min(this.delay * 2, this.maxPollMs);
        this.callbacks.onError(`service error (${err.status}); backing off`);
        return true;
      }
      this.callbacks.onError(err instanceof Error ? err.message : String(err));
      return false;
    }
  }

  async run(): Promise<void> {
    this.running = true;
    while (this.running) {
      const keep = await this.tick();
      if (!keep) break;
      await this.sleep(this.delay);
    }
    this.running = false;
  }

  /** Post a verdict for the currently shown query. The in-flight guard
   * swallows double clicks client-side; a 409 from the service (answer
   * already applied) is reported as not-accepted, never re-applied. */
  async answer(verdict: Verdict): Promise<boolean> {
    if (this.answerInFlight || this.currentQueryId === null) return false;
    this.answerInFlight = true;
    const queryId = this.currentQueryId;
    try {
      const outcome = await this.api.postAnswer(this.sessionId, verdict, queryId);
      return outcome.accepted;
    } catch (err) {
      this.answerInFlight = false;
      this.callbacks.onError(err instanceof Error ? err.message : String(err));
      return false;
    }
  }

  get pendingQueryId(): string | null {
    return this.currentQueryId;
  }

  get currentDelay(): number {
    return this.delay;
  }
}
