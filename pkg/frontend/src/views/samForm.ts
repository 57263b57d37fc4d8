/** The two pictographic 5-point emotion scales. */

import { esc } from "../escape.js";
import { SAM_SCALE, SamFormState, canSubmitSam } from "../forms.js";

const AXES: { axis: "valence" | "arousal"; question: string }[] = [
  { axis: "valence", question: "How pleasant do you feel?" },
  { axis: "arousal", question: "How activated do you feel?" },
];

export function renderSamForm(state: SamFormState, serverError?: string): string {
  const scales = AXES.map(({ axis, question }) => {
    const cells = SAM_SCALE.map((value) => {
      const checked = state[axis] === value ? " checked" : "";
      return [
        `<label class="sam-cell">`,
        `<input type="radio" name="${axis}" value="${value}"${checked}>`,
        `<span class="sam-figure sam-${axis}-${value}" aria-label="${axis} ${value} of 5"></span>`,
        `</label>`,
      ].join("");
    });
    return [
      `<fieldset class="sam-scale sam-${axis}"><legend>${esc(question)}</legend>`,
      ...cells,
      `</fieldset>`,
    ].join("\n");
  });

  const disabled = canSubmitSam(state) ? "" : " disabled";
  const errorLine =
    serverError === undefined
      ? ""
      : `<p class="inline-error" role="alert">${esc(serverError)}</p>`;
  return [
    `<form class="sam-form">`,
    ...scales,
    errorLine,
    `<button type="submit"${disabled}>Send</button>`,
    `</form>`,
  ].join("\n");
}
