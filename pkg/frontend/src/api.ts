/** Typed client for the platform's JSON endpoints.
 *
 * Every method resolves to the parsed response body or rejects with an
 * ApiError carrying the HTTP status and the server's error name, so the
 * views can distinguish validation problems from expiry or outages.
 */

import type { AppConfig } from "./config.js";
import type {
  AnswerBody,
  AnswerReceipt,
  EventIntakeResult,
  FeedbackDoc,
  FeedbackWindow,
  PromptDoc,
  UserEntry,
  WeeklyDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    detail: string,
  ) {
    super(`${errorName} (${status}): ${detail}`);
  }
}

export class ApiClient {
  constructor(private readonly config: AppConfig) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await fetch(`${this.config.apiBase}${path}`, {
      method,
      headers: {
        "content-type": "application/json",
        authorization: `Bearer ${this.config.token}`,
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const doc = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const name = doc?.error ?? "HttpError";
      const detail = doc?.detail ?? text;
      throw new ApiError(response.status, name, detail);
    }
    return doc as T;
  }

  healthz(): Promise<{ status: string; now: string }> {
    return this.request("GET", "/healthz");
  }

  listUsers(): Promise<{ users: UserEntry[] }> {
    return this.request("GET", "/users");
  }

  pendingPrompts(user: string): Promise<{ prompts: PromptDoc[] }> {
    return this.request("GET", `/prompts?user=${encodeURIComponent(user)}`);
  }

  answerPrompt(promptId: string, body: AnswerBody): Promise<AnswerReceipt> {
    return this.request(
      "POST",
      `/prompts/${encodeURIComponent(promptId)}/answer`,
      body,
    );
  }

  feedback(user: string, window: FeedbackWindow): Promise<FeedbackDoc> {
    const qs = `user=${encodeURIComponent(user)}&window=${window}`;
    return this.request("GET", `/feedback?${qs}`);
  }

  weekly(user: string): Promise<WeeklyDoc> {
    return this.request("GET", `/weekly?user=${encodeURIComponent(user)}`);
  }

  /** Report an opportunistic trigger (used by the device shim, and by
   * the contract tests to raise transport prompts on demand). */
  intakeEvent(doc: {
    user: string;
    kind: string;
    payload: Record<string, unknown>;
    t?: string;
  }): Promise<EventIntakeResult> {
    return this.request("POST", "/events", doc);
  }
}
