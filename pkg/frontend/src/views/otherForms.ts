/** Sleep, app-purpose and proximity forms. */

import { esc } from "../escape.js";
import {
  PURPOSES,
  PurposeFormState,
  SLEEP_QUALITIES,
  SleepFormState,
  canSubmitPurpose,
  canSubmitSleep,
} from "../forms.js";

export function renderSleepForm(state: SleepFormState): string {
  const qualities = SLEEP_QUALITIES.map((q) => {
    const selected = state.quality === q ? " selected" : "";
    return `<option value="${q}"${selected}>${q.replace("_", " ")}</option>`;
  });
  const disabled = canSubmitSleep(state) ? "" : " disabled";
  return [
    `<form class="sleep-form">`,
    `<label>Went to bed <input type="time" name="bed_time" value="${esc(state.bedTime ?? "")}"></label>`,
    `<label>Woke up <input type="time" name="wake_time" value="${esc(state.wakeTime ?? "")}"></label>`,
    `<label>Quality <select name="quality"><option value=""></option>${qualities.join("")}</select></label>`,
    `<button type="submit"${disabled}>Send</button>`,
    `</form>`,
  ].join("\n");
}

export function renderPurposeForm(state: PurposeFormState): string {
  const rows = state.apps.map((app) => {
    const options = PURPOSES.map((p) => {
      const selected = state.chosen[app] === p ? " selected" : "";
      return `<option value="${p}"${selected}>${p}</option>`;
    });
    return [
      `<label class="purpose-row" data-app="${esc(app)}">${esc(app)}`,
      `<select name="purpose-${esc(app)}"><option value=""></option>${options.join("")}</select>`,
      `</label>`,
    ].join("");
  });
  const disabled = canSubmitPurpose(state) ? "" : " disabled";
  return [
    `<form class="purpose-form">`,
    ...rows,
    `<button type="submit"${disabled}>Send</button>`,
    `</form>`,
  ].join("\n");
}

export function renderProximityForm(count: number | null): string {
  const disabled = count !== null && Number.isInteger(count) && count >= 0 ? "" : " disabled";
  return [
    `<form class="proximity-form">`,
    `<label>People within 2 meters <input type="number" name="people_within_2m" min="0" step="1" value="${esc(count ?? "")}"></label>`,
    `<button type="submit"${disabled}>Send</button>`,
    `</form>`,
  ].join("\n");
}
