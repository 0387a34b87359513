// DOM wiring: reads form inputs, dispatches store actions, re-renders panels.
// All statistics come from the server; this file only moves strings around.

import { ConductClient } from "./api.js";
import { curvesSvg, esc, recommendationPanel, statusStrip, timelineRows } from "./render.js";
import { ConductStore, type AppState } from "./state.js";
import type { DesignConfigDoc, DesignName } from "./types.js";

const client = new ConductClient("");
const store = new ConductStore(client);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function inputValue(id: string): string {
  return el<HTMLInputElement>(id).value.trim();
}

function numbers(text: string): number[] {
  return text.split(",").map((s) => Number(s.trim()));
}

function configFromForm(): DesignConfigDoc {
  return {
    version: "1",
    type: "design-config",
    design: el<HTMLSelectElement>("setup-design").value as DesignName,
    n_max: Number(inputValue("setup-nmax")),
    window_weeks: Number(inputValue("setup-window")),
    clinician_target: Number(inputValue("setup-theta")),
    patient_target: Number(inputValue("setup-phi")),
    clinician_skeleton: numbers(inputValue("setup-uskel")),
    patient_skeleton: numbers(inputValue("setup-vskel")),
    clinician_prior_sd: Number(inputValue("setup-usd")),
    patient_prior_sd: Number(inputValue("setup-vsd")),
    start_dose: Number(inputValue("setup-start")),
    no_skip: el<HTMLInputElement>("setup-noskip").checked,
  };
}

function renderErrors(state: AppState): void {
  for (const panel of ["setup", "enroll", "outcome", "clock", "finalize"]) {
    const node = el(`err-${panel}`);
    const message = state.fieldErrors[panel];
    node.textContent = message ?? "";
    node.classList.toggle("visible", Boolean(message));
  }
  const banner = el("reload-banner");
  if (state.reloadPrompt) {
    banner.innerHTML =
      `<span>${esc(state.reloadPrompt)}</span> <button id="reload-now">Reload</button>`;
    banner.classList.add("visible");
    el("reload-now").onclick = () => void store.reload();
  } else {
    banner.classList.remove("visible");
    banner.textContent = "";
  }
}

function render(state: AppState): void {
  el("status").textContent = statusStrip(state);
  el("setup-panel").style.display = state.trial ? "none" : "";
  el("conduct-panel").style.display = state.trial ? "" : "none";
  if (state.trial) {
    el("timeline-body").innerHTML = timelineRows(state.trial.patients);
    el("recommendation").innerHTML = recommendationPanel(state);
    el("curves").innerHTML = curvesSvg(
      state.recommendation?.clinician ?? null,
      state.recommendation?.patient ?? null,
    );
    const canFinalize = state.recommendation?.mode === "final";
    el<HTMLButtonElement>("btn-finalize").disabled = !canFinalize;
    const capacity = state.trial.n_enrolled >= state.trial.n_max;
    el<HTMLButtonElement>("btn-enroll").disabled =
      capacity || state.recommendation?.mode !== "assignment";
  }
  renderErrors(state);
}

async function refreshTrialList(): Promise<void> {
  const { trials } = await client.listTrials();
  const select = el<HTMLSelectElement>("open-id");
  select.innerHTML = trials
    .map((id) => `<option value="${esc(id)}">${esc(id)}</option>`)
    .join("");
  el<HTMLButtonElement>("btn-open").disabled = trials.length === 0;
}

function wire(): void {
  store.subscribe(render);

  el("btn-create").onclick = () => {
    let config: DesignConfigDoc;
    try {
      config = configFromForm();
    } catch (err) {
      el("err-setup").textContent = String(err);
      return;
    }
    void store.createTrial(config);
  };

  el("btn-open").onclick = () => {
    void store.openTrial(el<HTMLSelectElement>("open-id").value);
  };

  el("btn-clock").onclick = () => {
    void store.setClock(Number(inputValue("clock-week")));
  };

  el("btn-enroll").onclick = () => {
    const overrideDose = inputValue("enroll-dose");
    const note = inputValue("enroll-note");
    void store.enrollNext(
      overrideDose ? Number(overrideDose) : undefined,
      note || undefined,
    );
  };

  el("btn-outcome").onclick = () => {
    void store.reportOutcome({
      patientId: Number(inputValue("outcome-patient")),
      stream: el<HTMLSelectElement>("outcome-stream").value as "clinician" | "patient",
      eventWeek: Number(inputValue("outcome-week")),
    });
  };

  el("btn-finalize").onclick = () => void store.finalize();

  el("btn-export").onclick = async () => {
    const doc = await store.exportDocument();
    const blob = new Blob([JSON.stringify(doc, null, 2)], { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = `${store.state.trialId ?? "trial"}.json`;
    a.click();
    URL.revokeObjectURL(a.href);
  };

  void refreshTrialList();
}

wire();
