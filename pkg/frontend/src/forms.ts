/** Form state and client-side gating for the non-transport
 * questionnaires. Validation mirrors the server's rules so a payload
 * the form lets through is never rejected for shape reasons. */

import type {
  ProximityBody,
  PurposeBody,
  SamBody,
  SleepBody,
} from "./types.js";

export const SAM_SCALE = [1, 2, 3, 4, 5] as const;

export const SLEEP_QUALITIES = [
  "very_bad",
  "bad",
  "neutral",
  "good",
  "very_good",
] as const;

export const PURPOSES = ["communication", "leisure", "research", "work"] as const;

export interface SamFormState {
  valence: number | null;
  arousal: number | null;
}

export function emptySamForm(): SamFormState {
  return { valence: null, arousal: null };
}

export function pickSam(
  state: SamFormState,
  axis: "valence" | "arousal",
  value: number,
): SamFormState {
  if (!Number.isInteger(value) || value < 1 || value > 5) {
    throw new RangeError(`${axis} must be an integer 1..5`);
  }
  return { ...state, [axis]: value };
}

export function canSubmitSam(state: SamFormState): boolean {
  return state.valence !== null && state.arousal !== null;
}

export function samPayload(state: SamFormState): SamBody {
  if (state.valence === null || state.arousal === null) {
    throw new RangeError("pick both scales first");
  }
  return { kind: "sam_emotion", valence: state.valence, arousal: state.arousal };
}

export interface SleepFormState {
  bedTime: string | null;
  wakeTime: string | null;
  quality: string | null;
}

export function emptySleepForm(): SleepFormState {
  return { bedTime: null, wakeTime: null, quality: null };
}

const TIME_RE = /^([01]\d|2[0-3]):[0-5]\d$/;

export function setSleepField(
  state: SleepFormState,
  field: keyof SleepFormState,
  value: string,
): SleepFormState {
  if (field === "quality") {
    if (!(SLEEP_QUALITIES as readonly string[]).includes(value)) {
      throw new RangeError(`unknown sleep quality ${value}`);
    }
  } else if (!TIME_RE.test(value)) {
    throw new RangeError(`${field} must be HH:MM, got ${value}`);
  }
  return { ...state, [field]: value };
}

export function canSubmitSleep(state: SleepFormState): boolean {
  return state.bedTime !== null && state.wakeTime !== null && state.quality !== null;
}

export function sleepPayload(state: SleepFormState): SleepBody {
  if (!canSubmitSleep(state)) {
    throw new RangeError("sleep form is incomplete");
  }
  return {
    kind: "sleep_report",
    bed_time: state.bedTime as string,
    wake_time: state.wakeTime as string,
    quality: state.quality as string,
  };
}

export interface PurposeFormState {
  apps: readonly string[];
  chosen: Record<string, string>;
}

export function emptyPurposeForm(apps: readonly string[]): PurposeFormState {
  return { apps, chosen: {} };
}

export function choosePurpose(
  state: PurposeFormState,
  app: string,
  purpose: string,
): PurposeFormState {
  if (!state.apps.includes(app)) {
    throw new RangeError(`${app} was not prompted`);
  }
  if (!(PURPOSES as readonly string[]).includes(purpose)) {
    throw new RangeError(`unknown purpose ${purpose}`);
  }
  return { ...state, chosen: { ...state.chosen, [app]: purpose } };
}

export function canSubmitPurpose(state: PurposeFormState): boolean {
  return state.apps.every((app) => app in state.chosen);
}

export function purposePayload(state: PurposeFormState): PurposeBody {
  if (!canSubmitPurpose(state)) {
    throw new RangeError("assign a purpose to every listed app first");
  }
  return { kind: "app_purpose", purposes: { ...state.chosen } };
}

export function proximityPayload(count: number): ProximityBody {
  if (!Number.isInteger(count) || count < 0) {
    throw new RangeError("people count must be a non-negative integer");
  }
  return { kind: "proximity", people_within_2m: count };
}
