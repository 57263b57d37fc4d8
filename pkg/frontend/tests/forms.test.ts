import { describe, expect, it } from "vitest";

import {
  canSubmitPurpose,
  canSubmitSam,
  canSubmitSleep,
  choosePurpose,
  emptyPurposeForm,
  emptySamForm,
  emptySleepForm,
  pickSam,
  proximityPayload,
  purposePayload,
  samPayload,
  setSleepField,
  sleepPayload,
} from "../src/forms.js";

describe("emotion form", () => {
  it("blocks submission until both axes are picked", () => {
    let state = emptySamForm();
    expect(canSubmitSam(state)).toBe(false);
    state = pickSam(state, "valence", 4);
    expect(canSubmitSam(state)).toBe(false);
    state = pickSam(state, "arousal", 2);
    expect(canSubmitSam(state)).toBe(true);
    expect(samPayload(state)).toEqual({ kind: "sam_emotion", valence: 4, arousal: 2 });
  });

  it("rejects off-scale values", () => {
    expect(() => pickSam(emptySamForm(), "valence", 0)).toThrow(RangeError);
    expect(() => pickSam(emptySamForm(), "arousal", 6)).toThrow(RangeError);
    expect(() => pickSam(emptySamForm(), "valence", 2.5)).toThrow(RangeError);
  });

  it("refuses to build a partial payload", () => {
    expect(() => samPayload(pickSam(emptySamForm(), "valence", 3))).toThrow(
      RangeError,
    );
  });
});

describe("sleep form", () => {
  it("needs both times and a quality", () => {
    let state = emptySleepForm();
    state = setSleepField(state, "bedTime", "23:30");
    state = setSleepField(state, "wakeTime", "07:15");
    expect(canSubmitSleep(state)).toBe(false);
    state = setSleepField(state, "quality", "good");
    expect(canSubmitSleep(state)).toBe(true);
    expect(sleepPayload(state)).toEqual({
      kind: "sleep_report",
      bed_time: "23:30",
      wake_time: "07:15",
      quality: "good",
    });
  });

  it("rejects malformed times and unknown qualities", () => {
    expect(() => setSleepField(emptySleepForm(), "bedTime", "25:00")).toThrow(
      RangeError,
    );
    expect(() => setSleepField(emptySleepForm(), "wakeTime", "7am")).toThrow(
      RangeError,
    );
    expect(() => setSleepField(emptySleepForm(), "quality", "fantastic")).toThrow(
      RangeError,
    );
  });
});

describe("purpose form", () => {
  it("requires a purpose for every prompted app", () => {
    let state = emptyPurposeForm(["org.chat", "org.mail"]);
    expect(canSubmitPurpose(state)).toBe(false);
    state = choosePurpose(state, "org.chat", "communication");
    expect(canSubmitPurpose(state)).toBe(false);
    state = choosePurpose(state, "org.mail", "work");
    expect(canSubmitPurpose(state)).toBe(true);
    expect(purposePayload(state)).toEqual({
      kind: "app_purpose",
      purposes: { "org.chat": "communication", "org.mail": "work" },
    });
  });

  it("rejects apps that were not prompted and unknown purposes", () => {
    const state = emptyPurposeForm(["org.chat"]);
    expect(() => choosePurpose(state, "org.game", "leisure")).toThrow(RangeError);
    expect(() => choosePurpose(state, "org.chat", "mischief")).toThrow(RangeError);
  });

  it("submits immediately when no apps were listed", () => {
    const state = emptyPurposeForm([]);
    expect(canSubmitPurpose(state)).toBe(true);
    expect(purposePayload(state)).toEqual({ kind: "app_purpose", purposes: {} });
  });
});

describe("proximity form", () => {
  it("accepts whole non-negative counts", () => {
    expect(proximityPayload(0)).toEqual({ kind: "proximity", people_within_2m: 0 });
    expect(proximityPayload(7)).toEqual({ kind: "proximity", people_within_2m: 7 });
  });

  it("rejects negatives and fractions", () => {
    expect(() => proximityPayload(-1)).toThrow(RangeError);
    expect(() => proximityPayload(1.5)).toThrow(RangeError);
  });
});
