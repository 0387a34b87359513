// Thin typed client for the conduct service. Every method either returns the
// parsed payload or throws ApiError carrying the service's error code, so the
// caller can distinguish validation problems (inline messages) from sequence
// conflicts (reload prompt).

import type {
  DesignConfigDoc,
  EventAccepted,
  RecommendationView,
  TrialResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: unknown;

  constructor(status: number, code: string, message: string, detail?: unknown) {
    super(message);
    this.status = status;
    this.code = code;
    this.detail = detail;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const text = await resp.text();
  const body = text ? JSON.parse(text) : {};
  if (!resp.ok) {
    const err = body?.error ?? {};
    throw new ApiError(
      resp.status,
      err.code ?? "http-error",
      err.message ?? `request failed with status ${resp.status}`,
      err.detail,
    );
  }
  return body as T;
}

export interface OutcomeEntry {
  patientId: number;
  stream: "clinician" | "patient";
  eventWeek: number; // weeks since that patient's entry
}

export class ConductClient {
  constructor(readonly base: string) {}

  health(): Promise<{ status: string }> {
    return request(this.base, "/healthz");
  }

  listTrials(): Promise<{ trials: string[] }> {
    return request(this.base, "/trials");
  }

  createTrial(config: DesignConfigDoc): Promise<{ trial_id: string; last_seq: number }> {
    return request(this.base, "/trials", { method: "POST", body: JSON.stringify(config) });
  }

  getTrial(trialId: string): Promise<TrialResponse> {
    return request(this.base, `/trials/${trialId}`);
  }

  recommendation(trialId: string, atWeeks: number): Promise<RecommendationView> {
    return request(this.base, `/trials/${trialId}/recommendation?at=${atWeeks}`);
  }

  private postEvent(
    trialId: string,
    expectedSeq: number,
    at: number,
    event: string,
    data: Record<string, unknown>,
  ): Promise<EventAccepted> {
    return request(this.base, `/trials/${trialId}/events`, {
      method: "POST",
      body: JSON.stringify({ at, event, data, expected_seq: expectedSeq }),
    });
  }

  enroll(
    trialId: string,
    expectedSeq: number,
    atWeeks: number,
    patientId: number,
    dose: number,
    override?: { note: string },
  ): Promise<EventAccepted> {
    const data: Record<string, unknown> = { patient_id: patientId, dose_index: dose };
    if (override) {
      data.override = true;
      data.note = override.note;
    }
    return this.postEvent(trialId, expectedSeq, atWeeks, "patient-enrolled", data);
  }

  reportOutcome(
    trialId: string,
    expectedSeq: number,
    atWeeks: number,
    entry: OutcomeEntry,
  ): Promise<EventAccepted> {
    return this.postEvent(trialId, expectedSeq, atWeeks, "outcome-reported", {
      patient_id: entry.patientId,
      stream: entry.stream,
      event_time_weeks: entry.eventWeek,
    });
  }

  advanceClock(trialId: string, expectedSeq: number, toWeek: number): Promise<EventAccepted> {
    return this.postEvent(trialId, expectedSeq, toWeek, "followup-clock-advanced", {
      now: toWeek,
    });
  }

  finalize(
    trialId: string,
    expectedSeq: number,
    atWeeks: number,
    finalDose: number,
  ): Promise<EventAccepted> {
    return this.postEvent(trialId, expectedSeq, atWeeks, "trial-finalized", {
      final_dose: finalDose,
    });
  }
}
