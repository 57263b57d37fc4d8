/** The pending-questionnaire list page and its reminder badge. */

import { esc } from "../escape.js";
import type { PromptDoc } from "../types.js";

const KIND_TITLES: Record<string, string> = {
  sam_emotion: "How do you feel right now?",
  sleep_report: "How did you sleep?",
  app_purpose: "What did you use these apps for?",
  proximity: "How many people are within 2 meters?",
  transport: "About your latest trip",
};

/** Drop prompts whose validity has already lapsed; the server filters
 * these too, the client just refuses to render a stale cache. */
export function visiblePrompts(prompts: PromptDoc[], now: Date): PromptDoc[] {
  return prompts.filter((p) => new Date(p.expires_at) > now);
}

/** Local removal after a successful answer, no reload involved. */
export function withoutPrompt(prompts: PromptDoc[], promptId: string): PromptDoc[] {
  return prompts.filter((p) => p.prompt_id !== promptId);
}

export function renderReminderBadge(prompts: PromptDoc[]): string {
  if (prompts.length === 0) {
    return `<span class="reminder-badge empty" aria-label="no pending questionnaires"></span>`;
  }
  return `<span class="reminder-badge" aria-label="${prompts.length} pending questionnaires">${prompts.length}</span>`;
}

export interface PendingListOptions {
  now: Date;
  fetchError?: string;
}

export function renderPendingList(
  prompts: PromptDoc[],
  options: PendingListOptions,
): string {
  if (options.fetchError !== undefined) {
    return [
      `<section class="pending-list">`,
      `<div class="offline-banner" role="alert">You appear to be offline: ${esc(options.fetchError)}</div>`,
      `</section>`,
    ].join("\n");
  }
  const visible = visiblePrompts(prompts, options.now);
  const rows = visible.map((p) => {
    const title = KIND_TITLES[p.kind] ?? p.kind;
    return [
      `<li class="prompt-row" data-prompt-id="${esc(p.prompt_id)}" data-kind="${esc(p.kind)}">`,
      `<a href="#/answer/${esc(p.prompt_id)}">${esc(title)}</a>`,
      `<time class="expires" datetime="${esc(p.expires_at)}">valid until ${esc(p.expires_at)}</time>`,
      `</li>`,
    ].join("");
  });
  if (rows.length === 0) {
    return [
      `<section class="pending-list">`,
      `<p class="all-done">Nothing to answer right now.</p>`,
      `</section>`,
    ].join("\n");
  }
  return [
    `<section class="pending-list">`,
    `<ul>`,
    ...rows,
    `</ul>`,
    `</section>`,
  ].join("\n");
}
