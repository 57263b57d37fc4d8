/** JSON shapes exchanged with the platform API. The client renders these
 * verbatim; it never derives metrics of its own. */

export type QuestionnaireKind =
  | "sam_emotion"
  | "sleep_report"
  | "app_purpose"
  | "proximity"
  | "transport";

export interface PromptDoc {
  prompt_id: string;
  user: string;
  kind: QuestionnaireKind;
  raised_at: string;
  expires_at: string;
  context: Record<string, unknown>;
}

export interface AnswerReceipt {
  prompt_id: string;
  user: string;
  kind: QuestionnaireKind;
  payload: Record<string, unknown>;
  answered_at: string;
}

export type SamBody = { kind: "sam_emotion"; valence: number; arousal: number };
export type SleepBody = {
  kind: "sleep_report";
  bed_time: string;
  wake_time: string;
  quality: string;
};
export type PurposeBody = { kind: "app_purpose"; purposes: Record<string, string> };
export type ProximityBody = { kind: "proximity"; people_within_2m: number };
export type TransportBody = {
  kind: "transport";
  transport: string;
  people_bucket: string;
  trip_id?: string;
};
export type AnswerBody =
  | SamBody
  | SleepBody
  | PurposeBody
  | ProximityBody
  | TransportBody;

export type FeedbackWindow = "last_24h" | "last_4d" | "last_8d";
export const FEEDBACK_WINDOWS: readonly FeedbackWindow[] = [
  "last_24h",
  "last_4d",
  "last_8d",
];

export type Group = "active" | "control";

export type RiskLevel = "moderated" | "high" | "very_high" | "extremely_high";
export const RISK_LEVELS: readonly RiskLevel[] = [
  "moderated",
  "high",
  "very_high",
  "extremely_high",
];

/** Window metrics document; active-only fields are absent for the
 * control group and may be absent for anyone when data is thin. */
export interface FeedbackDoc {
  user: string;
  group: Group;
  window: FeedbackWindow;
  computed_at: string;
  activity_pct?: Record<string, number>;
  sleep_mean_hours?: number;
  sleep_quality_mean?: number;
  sleep_quality_label?: string;
  valence_mean?: number;
  arousal_mean?: number;
  municipal_risk?: RiskLevel;
  contacts_mean?: number;
  outings_count?: number;
  outings_mean_minutes?: number;
  transport_pct?: Record<string, number>;
}

export interface WeeklyDoc {
  user: string;
  group: Group;
  week_start: string;
  week_end: string;
  contacts_estimate: number;
  contacts_polarity: string;
  contacts_message: string;
  mobility_mean_minutes: number;
  mobility_polarity: string;
  mobility_message: string;
  risk_message: string;
  measures_message: string;
  notes: string[];
}

export interface UserEntry {
  user: string;
  municipality: string;
  group: Group;
}

export interface EventIntakeResult {
  prompt: PromptDoc | null;
}
