// Application state and the actions the panels dispatch. The store tracks the
// server-assigned sequence number on every write so a concurrent edit anywhere
// surfaces as a 409 -> reload prompt instead of silent divergence. Statistics
// are never computed here; the store only holds what the service returned.

import { ApiError, ConductClient, type OutcomeEntry } from "./api.js";
import type {
  DesignConfigDoc,
  RecommendationView,
  TrialResponse,
  TrialStateView,
} from "./types.js";

export interface AppState {
  trialId: string | null;
  lastSeq: number;
  clockWeek: number; // operator's working clock, in trial weeks
  trial: TrialStateView | null;
  config: DesignConfigDoc | null;
  recommendation: RecommendationView | null;
  fieldErrors: Record<string, string>; // panel id -> inline message
  reloadPrompt: string | null; // set on sequence conflicts
  lastError: string | null;
}

export function initialState(): AppState {
  return {
    trialId: null,
    lastSeq: 0,
    clockWeek: 0,
    trial: null,
    config: null,
    recommendation: null,
    fieldErrors: {},
    reloadPrompt: null,
    lastError: null,
  };
}

export type Listener = (state: AppState) => void;

export class ConductStore {
  state: AppState = initialState();
  private listeners: Listener[] = [];

  constructor(readonly client: ConductClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private patch(update: Partial<AppState>): void {
    this.state = { ...this.state, ...update };
    this.emit();
  }

  /** Route an API failure to the right surface: 409 -> reload prompt, else inline. */
  private surfaceError(panel: string, err: unknown): void {
    if (err instanceof ApiError && err.status === 409) {
      this.patch({
        reloadPrompt: `This trial changed on the server (${err.message}). Reload to continue.`,
      });
      return;
    }
    const message = err instanceof Error ? err.message : String(err);
    this.patch({
      fieldErrors: { ...this.state.fieldErrors, [panel]: message },
      lastError: message,
    });
  }

  private clearError(panel: string): void {
    if (panel in this.state.fieldErrors) {
      const fieldErrors = { ...this.state.fieldErrors };
      delete fieldErrors[panel];
      this.patch({ fieldErrors });
    }
  }

  async createTrial(config: DesignConfigDoc): Promise<boolean> {
    this.clearError("setup");
    try {
      const { trial_id } = await this.client.createTrial(config);
      await this.openTrial(trial_id);
      return true;
    } catch (err) {
      this.surfaceError("setup", err);
      return false;
    }
  }

  async openTrial(trialId: string): Promise<void> {
    const trial: TrialResponse = await this.client.getTrial(trialId);
    this.patch({
      trialId,
      lastSeq: trial.last_seq,
      trial: trial.state,
      config: trial.config,
      clockWeek: Math.max(this.state.clockWeek, trial.state.now),
      reloadPrompt: null,
    });
    await this.refreshRecommendation();
  }

  /** Reconcile against the server after any write (or a reload prompt). */
  async reload(): Promise<void> {
    if (this.state.trialId) await this.openTrial(this.state.trialId);
  }

  async setClock(week: number): Promise<void> {
    this.clearError("clock");
    if (!this.state.trial) return;
    if (week < this.state.trial.now) {
      this.surfaceError("clock", new Error(
        `the trial clock is already at week ${this.state.trial.now}`,
      ));
      return;
    }
    this.patch({ clockWeek: week });
    await this.refreshRecommendation();
  }

  async refreshRecommendation(): Promise<void> {
    const { trialId, trial } = this.state;
    if (!trialId || !trial) return;
    if (trial.finalized_dose !== null) {
      this.patch({ recommendation: null });
      return;
    }
    try {
      const rec = await this.client.recommendation(trialId, this.state.clockWeek);
      this.clearError("recommendation");
      this.patch({ recommendation: rec });
    } catch (err) {
      this.patch({ recommendation: null });
      this.surfaceError("recommendation", err);
    }
  }

  /** Enroll at the engine-recommended dose (or an override with audit note). */
  async enrollNext(dose?: number, overrideNote?: string): Promise<boolean> {
    this.clearError("enroll");
    const { trialId, trial, recommendation } = this.state;
    if (!trialId || !trial) return false;
    const nextId = trial.n_enrolled + 1;
    const assigned = dose ?? recommendation?.dose;
    if (assigned === undefined) {
      this.surfaceError("enroll", new Error("no recommendation available yet"));
      return false;
    }
    const override =
      recommendation && assigned !== recommendation.dose
        ? { note: overrideNote ?? "" }
        : undefined;
    try {
      const accepted = await this.client.enroll(
        trialId, this.state.lastSeq, this.state.clockWeek, nextId, assigned, override,
      );
      this.patch({ lastSeq: accepted.last_seq, trial: accepted.state });
      await this.refreshRecommendation();
      return true;
    } catch (err) {
      this.surfaceError("enroll", err);
      return false;
    }
  }

  async reportOutcome(entry: OutcomeEntry): Promise<boolean> {
    this.clearError("outcome");
    const { trialId } = this.state;
    if (!trialId) return false;
    try {
      const accepted = await this.client.reportOutcome(
        trialId, this.state.lastSeq, this.state.clockWeek, entry,
      );
      this.patch({ lastSeq: accepted.last_seq, trial: accepted.state });
      await this.refreshRecommendation();
      return true;
    } catch (err) {
      this.surfaceError("outcome", err);
      return false;
    }
  }

  /** Allowed once capacity is reached and the window has run out for everyone. */
  async finalize(): Promise<boolean> {
    this.clearError("finalize");
    const { trialId, recommendation } = this.state;
    if (!trialId || !recommendation || recommendation.mode !== "final") {
      this.surfaceError("finalize", new Error("the final recommendation is not ready"));
      return false;
    }
    try {
      const accepted = await this.client.finalize(
        trialId, this.state.lastSeq, this.state.clockWeek, recommendation.dose,
      );
      this.patch({
        lastSeq: accepted.last_seq,
        trial: accepted.state,
        recommendation: null,
      });
      return true;
    } catch (err) {
      this.surfaceError("finalize", err);
      return false;
    }
  }

  /** The exportable audit document; exactly what the offline CLI consumes. */
  async exportDocument(): Promise<unknown> {
    if (!this.state.trialId) throw new Error("no trial open");
    const trial = await this.client.getTrial(this.state.trialId);
    return trial.document;
  }
}
