/** The weekly report page: the server's reinforcement texts, verbatim. */

import { esc } from "../escape.js";
import type { WeeklyDoc } from "../types.js";

export function renderWeeklyReport(doc: WeeklyDoc): string {
  const notes = doc.notes.map((n) => `<li class="weekly-note">${esc(n)}</li>`);
  return [
    `<section class="weekly-report" data-group="${doc.group}">`,
    `<header><time datetime="${esc(doc.week_start)}">${esc(doc.week_start)}</time>`,
    ` to <time datetime="${esc(doc.week_end)}">${esc(doc.week_end)}</time></header>`,
    `<p class="weekly-message contacts" data-polarity="${esc(doc.contacts_polarity)}">${esc(doc.contacts_message)}</p>`,
    `<p class="weekly-message mobility" data-polarity="${esc(doc.mobility_polarity)}">${esc(doc.mobility_message)}</p>`,
    `<p class="weekly-message risk">${esc(doc.risk_message)}</p>`,
    `<p class="weekly-message measures">${esc(doc.measures_message)}</p>`,
    ...(notes.length > 0 ? [`<ul class="weekly-notes">`, ...notes, `</ul>`] : []),
    `</section>`,
  ].join("\n");
}
