/** The tailored feedback dashboard.
 *
 * Three interval tabs over the server's window-metrics document.
 * Everybody gets activity bars, the sleep summary and the emotion
 * icons; the risk gauge, contact count, outing figures and transport
 * shares render only for the active group, and only from fields the
 * server actually sent. Missing data turns into an explicit
 * "insufficient data" placeholder, never into a client-side guess.
 */

import { esc } from "../escape.js";
import {
  FEEDBACK_WINDOWS,
  FeedbackDoc,
  FeedbackWindow,
  RISK_LEVELS,
} from "../types.js";

const WINDOW_LABELS: Record<FeedbackWindow, string> = {
  last_24h: "Last 24 hours",
  last_4d: "Last 4 days",
  last_8d: "Last 8 days",
};

function tabs(active: FeedbackWindow): string {
  const items = FEEDBACK_WINDOWS.map((w) => {
    const current = w === active ? ` aria-current="page"` : "";
    return `<a class="window-tab" href="#/feedback/${w}"${current}>${WINDOW_LABELS[w]}</a>`;
  });
  return `<nav class="window-tabs">${items.join("")}</nav>`;
}

function placeholder(what: string): string {
  return `<p class="placeholder">insufficient data for ${esc(what)}</p>`;
}

function activityWidget(doc: FeedbackDoc): string {
  if (!doc.activity_pct || Object.keys(doc.activity_pct).length === 0) {
    return `<div class="widget-activity">${placeholder("activity")}</div>`;
  }
  const bars = Object.entries(doc.activity_pct).map(
    ([label, pct]) =>
      `<div class="activity-bar" data-activity="${esc(label)}" style="--pct:${esc(pct)}">` +
      `${esc(label)}: ${esc(pct)}%</div>`,
  );
  return `<div class="widget-activity">${bars.join("")}</div>`;
}

function sleepWidget(doc: FeedbackDoc): string {
  if (doc.sleep_mean_hours === undefined && doc.sleep_quality_label === undefined) {
    return `<div class="widget-sleep">${placeholder("sleep")}</div>`;
  }
  const parts: string[] = [];
  if (doc.sleep_mean_hours !== undefined) {
    parts.push(`<span class="sleep-hours">${esc(doc.sleep_mean_hours)} h</span>`);
  }
  if (doc.sleep_quality_label !== undefined) {
    parts.push(`<span class="sleep-quality">${esc(doc.sleep_quality_label)}</span>`);
  }
  return `<div class="widget-sleep">${parts.join(" ")}</div>`;
}

function emotionWidget(doc: FeedbackDoc): string {
  if (doc.valence_mean === undefined && doc.arousal_mean === undefined) {
    return `<div class="widget-emotion">${placeholder("emotion")}</div>`;
  }
  const parts: string[] = [];
  if (doc.valence_mean !== undefined) {
    parts.push(
      `<span class="emotion-icon valence" data-value="${esc(doc.valence_mean)}"></span>`,
    );
  }
  if (doc.arousal_mean !== undefined) {
    parts.push(
      `<span class="emotion-icon arousal" data-value="${esc(doc.arousal_mean)}"></span>`,
    );
  }
  return `<div class="widget-emotion">${parts.join("")}</div>`;
}

function riskGauge(doc: FeedbackDoc): string {
  if (doc.municipal_risk === undefined) {
    return `<div class="widget-risk">${placeholder("municipal risk")}</div>`;
  }
  const sectors = RISK_LEVELS.map((level) => {
    const current = level === doc.municipal_risk ? ` data-current="true"` : "";
    return `<div class="gauge-sector" data-level="${level}"${current}>${esc(
      level.replace("_", " "),
    )}</div>`;
  });
  return `<div class="widget-risk"><div class="risk-gauge" role="meter" aria-valuetext="${esc(
    doc.municipal_risk,
  )}">${sectors.join("")}</div></div>`;
}

function contactsWidget(doc: FeedbackDoc): string {
  if (doc.contacts_mean === undefined) {
    return `<div class="widget-contacts">${placeholder("contacts")}</div>`;
  }
  return `<div class="widget-contacts"><span class="contacts-number">${esc(
    doc.contacts_mean,
  )}</span> people per day</div>`;
}

function outingsWidget(doc: FeedbackDoc): string {
  if (doc.outings_count === undefined && doc.outings_mean_minutes === undefined) {
    return `<div class="widget-outings">${placeholder("outings")}</div>`;
  }
  const parts: string[] = [];
  if (doc.outings_count !== undefined) {
    parts.push(`<span class="outings-count">${esc(doc.outings_count)} outings</span>`);
  }
  if (doc.outings_mean_minutes !== undefined) {
    parts.push(
      `<span class="outings-minutes">${esc(doc.outings_mean_minutes)} min on average</span>`,
    );
  }
  return `<div class="widget-outings">${parts.join(" ")}</div>`;
}

function transportWidget(doc: FeedbackDoc): string {
  if (!doc.transport_pct || Object.keys(doc.transport_pct).length === 0) {
    return `<div class="widget-transport">${placeholder("transport")}</div>`;
  }
  const rows = Object.entries(doc.transport_pct).map(
    ([mode, pct]) =>
      `<div class="transport-share" data-mode="${esc(mode)}">${esc(mode)}: ${esc(pct)}%</div>`,
  );
  return `<div class="widget-transport">${rows.join("")}</div>`;
}

export function renderFeedbackDashboard(doc: FeedbackDoc): string {
  const common = [activityWidget(doc), sleepWidget(doc), emotionWidget(doc)];
  const activeOnly =
    doc.group === "active"
      ? [riskGauge(doc), contactsWidget(doc), outingsWidget(doc), transportWidget(doc)]
      : [];
  return [
    `<section class="feedback-dashboard" data-group="${doc.group}" data-window="${doc.window}">`,
    tabs(doc.window),
    ...common,
    ...activeOnly,
    `</section>`,
  ].join("\n");
}
