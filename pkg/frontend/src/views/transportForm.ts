/** The two-step transport questionnaire: family first, then the
 * occupancy bucket list that belongs to that family. */

import { esc } from "../escape.js";
import {
  TRANSPORT_GRID,
  TransportFormState,
  bucketsFor,
  canSubmitTransport,
} from "../transport.js";

export function renderTransportForm(state: TransportFormState): string {
  const families = TRANSPORT_GRID.map((family) => {
    const checked = state.transport === family.code ? " checked" : "";
    return [
      `<label class="transport-option">`,
      `<input type="radio" name="transport" value="${esc(family.code)}"${checked}>`,
      `${esc(family.label)}`,
      `</label>`,
    ].join("");
  });

  const bucketRows: string[] = [];
  if (state.transport !== null) {
    for (const bucket of bucketsFor(state.transport)) {
      const checked = state.bucket === bucket.code ? " checked" : "";
      bucketRows.push(
        [
          `<label class="bucket-option">`,
          `<input type="radio" name="people_bucket" value="${esc(bucket.code)}"${checked}>`,
          `${esc(bucket.label)}`,
          `</label>`,
        ].join(""),
      );
    }
  }

  const disabled = canSubmitTransport(state) ? "" : " disabled";
  return [
    `<form class="transport-form" data-trip-id="${esc(state.tripId)}">`,
    `<fieldset class="transport-families"><legend>How did you travel?</legend>`,
    ...families,
    `</fieldset>`,
    `<fieldset class="transport-buckets"><legend>People around you</legend>`,
    ...(bucketRows.length > 0
      ? bucketRows
      : [`<p class="pick-family-first">Choose a transport first.</p>`]),
    `</fieldset>`,
    `<button type="submit"${disabled}>Send</button>`,
    `</form>`,
  ].join("\n");
}
