/** Session controller: owns the prompt cache and routes answers.
 *
 * Updates are optimistic: a successful POST removes the prompt row
 * locally without refetching; any error leaves the cache untouched and
 * surfaces the server's message, and an expired answer (410) drops the
 * stale prompt because the server will never accept it again.
 */

import { ApiClient, ApiError } from "./api.js";
import type { AppConfig } from "./config.js";
import type { AnswerBody, FeedbackWindow, PromptDoc } from "./types.js";
import { renderFeedbackDashboard } from "./views/feedback.js";
import {
  renderPendingList,
  renderReminderBadge,
  visiblePrompts,
  withoutPrompt,
} from "./views/prompts.js";
import { renderWeeklyReport } from "./views/weekly.js";

export interface AnswerOutcome {
  ok: boolean;
  removed: boolean;
  errorMessage?: string;
}

export class AppController {
  readonly client: ApiClient;
  private prompts: PromptDoc[] = [];
  private fetchError?: string;

  constructor(
    readonly config: AppConfig,
    private readonly now: () => Date = () => new Date(),
  ) {
    this.client = new ApiClient(config);
  }

  get pending(): PromptDoc[] {
    return visiblePrompts(this.prompts, this.now());
  }

  async refreshPrompts(): Promise<void> {
    try {
      const doc = await this.client.pendingPrompts(this.config.user);
      this.prompts = doc.prompts;
      this.fetchError = undefined;
    } catch (err) {
      this.fetchError = err instanceof Error ? err.message : String(err);
    }
  }

  async submitAnswer(promptId: string, body: AnswerBody): Promise<AnswerOutcome> {
    try {
      await this.client.answerPrompt(promptId, body);
      this.prompts = withoutPrompt(this.prompts, promptId);
      return { ok: true, removed: true };
    } catch (err) {
      if (err instanceof ApiError && err.status === 410) {
        this.prompts = withoutPrompt(this.prompts, promptId);
        return { ok: false, removed: true, errorMessage: err.message };
      }
      const message = err instanceof Error ? err.message : String(err);
      return { ok: false, removed: false, errorMessage: message };
    }
  }

  renderPromptsPage(): string {
    return renderPendingList(this.prompts, {
      now: this.now(),
      fetchError: this.fetchError,
    });
  }

  renderBadge(): string {
    return renderReminderBadge(this.pending);
  }

  async renderFeedbackPage(window: FeedbackWindow): Promise<string> {
    const doc = await this.client.feedback(this.config.user, window);
    return renderFeedbackDashboard(doc);
  }

  async renderWeeklyPage(): Promise<string> {
    const doc = await this.client.weekly(this.config.user);
    return renderWeeklyReport(doc);
  }
}
