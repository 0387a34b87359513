// Payload shapes returned by the conduct service. The UI never derives
// statistics itself: every number below is produced server-side.

export type DesignName = "tite-crm" | "pro-crm" | "tite-pro-crm" | "tite-crm+pro";
export type StreamName = "clinician" | "patient";

export interface DesignConfigDoc {
  version: "1";
  type: "design-config";
  design: DesignName;
  n_max: number;
  window_weeks: number;
  clinician_target: number;
  patient_target: number;
  clinician_skeleton: number[];
  patient_skeleton: number[];
  clinician_prior_sd: number;
  patient_prior_sd: number;
  start_dose: number;
  no_skip: boolean;
}

export interface PatientRow {
  id: number;
  entry_week: number;
  dose: number;
  follow_up_fraction: number;
  clin_event_week: number | null;
  pat_event_week: number | null;
  clin_dlt_in_window: boolean;
  pat_dlt_in_window: boolean;
}

export interface TrialStateView {
  created: boolean;
  now: number;
  n_enrolled: number;
  n_max: number;
  window_weeks: number;
  highest_dose_given: number;
  finalized_dose: number | null;
  patients: PatientRow[];
}

export interface StreamEstimate {
  stream: StreamName;
  posterior_param: number;
  probabilities: number[];
  target: number;
  choice: number;
}

export interface RecommendationView {
  at: number;
  trial_id: string;
  dose: number;
  mode: "assignment" | "final";
  model_choice: number;
  constraint_applied: boolean;
  highest_dose_given: number;
  clinician: StreamEstimate;
  patient: StreamEstimate;
}

export interface TrialEventRecord {
  seq: number;
  at: number;
  event: string;
  data: Record<string, unknown>;
  recorded_at: string;
  state_hash?: string;
}

export interface TrialDocumentView {
  version: "1";
  type: "trial-document";
  trial_id: string;
  events: TrialEventRecord[];
}

export interface TrialResponse {
  document: TrialDocumentView;
  state: TrialStateView;
  config: DesignConfigDoc | null;
  last_seq: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export interface EventAccepted {
  event: TrialEventRecord;
  last_seq: number;
  state: TrialStateView;
}
