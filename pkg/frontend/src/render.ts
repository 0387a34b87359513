// Pure view builders: state in, HTML/SVG strings out. Keeping these free of
// DOM access makes every displayed number testable in node against the
// service's payloads.

import type { AppState } from "./state.js";
import type { PatientRow, RecommendationView, StreamEstimate } from "./types.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function pct(x: number): string {
  return `${(100 * x).toFixed(0)}%`;
}

export function week(x: number): string {
  return Number.isInteger(x) ? `${x}` : x.toFixed(1);
}

// ── recommendation panel ────────────────────────────────────────────────────

export function recommendationText(rec: RecommendationView | null): string {
  if (!rec) return "No recommendation available.";
  if (rec.mode === "final") {
    return `Final recommended dose: ${rec.dose}`;
  }
  return `Assign next patient dose ${rec.dose}`;
}

export function recommendationPanel(state: AppState): string {
  const rec = state.recommendation;
  if (state.trial?.finalized_dose != null) {
    return `<div class="rec-final">Trial finalized at dose ${state.trial.finalized_dose}</div>`;
  }
  if (!rec) {
    const err = state.fieldErrors["recommendation"];
    return `<div class="rec-empty">${esc(err ?? "No recommendation available.")}</div>`;
  }
  const rows = [
    streamChoiceRow(rec.clinician),
    streamChoiceRow(rec.patient),
  ].join("");
  const constraint = rec.constraint_applied
    ? `<div class="rec-note">escalation cap: model chose ${rec.model_choice}, ` +
      `assigned ${rec.dose} (highest given so far: ${rec.highest_dose_given})</div>`
    : "";
  const binding =
    rec.patient.choice < rec.clinician.choice
      ? `<div class="rec-note rec-binding">patient-reported constraint is binding</div>`
      : "";
  return `
    <div class="rec-dose" data-dose="${rec.dose}">${esc(recommendationText(rec))}</div>
    <table class="rec-streams"><thead>
      <tr><th>stream</th><th>target</th><th>choice</th></tr>
    </thead><tbody>${rows}</tbody></table>
    ${constraint}${binding}`;
}

function streamChoiceRow(est: StreamEstimate): string {
  return `<tr><td>${est.stream}</td><td>${est.target.toFixed(2)}</td>` +
    `<td>dose ${est.choice}</td></tr>`;
}

// ── patient timeline ────────────────────────────────────────────────────────

export function timelineRows(patients: PatientRow[]): string {
  if (patients.length === 0) {
    return `<tr><td colspan="6" class="dim">no patients enrolled yet</td></tr>`;
  }
  return patients
    .map((p) => {
      const clin = outcomeCell(p.clin_event_week, p.clin_dlt_in_window);
      const pat = outcomeCell(p.pat_event_week, p.pat_dlt_in_window);
      return `<tr data-patient="${p.id}">
        <td>${p.id}</td>
        <td>${week(p.entry_week)}</td>
        <td>dose ${p.dose}</td>
        <td><div class="fup"><div class="fup-bar" style="width:${pct(p.follow_up_fraction)}"></div></div>
            <span class="fup-label">${pct(p.follow_up_fraction)}</span></td>
        <td>${clin}</td>
        <td>${pat}</td>
      </tr>`;
    })
    .join("\n");
}

function outcomeCell(eventWeek: number | null, inWindow: boolean): string {
  if (eventWeek === null) return `<span class="dim">—</span>`;
  const badge = inWindow ? `<span class="badge dlt">DLT</span>` : `<span class="badge late">past window</span>`;
  return `wk ${week(eventWeek)} ${badge}`;
}

// ── dual toxicity curves (inline SVG) ───────────────────────────────────────

const W = 420;
const H = 220;
const PAD = { left: 42, right: 14, top: 12, bottom: 28 };

function x(doseIndex: number, m: number): number {
  return PAD.left + ((doseIndex - 1) / Math.max(m - 1, 1)) * (W - PAD.left - PAD.right);
}

function y(prob: number): number {
  return PAD.top + (1 - prob) * (H - PAD.top - PAD.bottom);
}

export function curvePath(probabilities: number[]): string {
  const m = probabilities.length;
  return probabilities
    .map((p, i) => `${i === 0 ? "M" : "L"}${x(i + 1, m).toFixed(1)},${y(p).toFixed(1)}`)
    .join(" ");
}

export function curvesSvg(
  clinician: StreamEstimate | null,
  patient: StreamEstimate | null,
): string {
  const m = clinician?.probabilities.length ?? patient?.probabilities.length ?? 5;
  const doseTicks = Array.from({ length: m }, (_, i) => {
    const xi = x(i + 1, m);
    return `<text x="${xi}" y="${H - 8}" class="tick">${i + 1}</text>`;
  }).join("");
  const yTicks = [0, 0.25, 0.5, 0.75, 1.0]
    .map((p) => `<text x="${PAD.left - 6}" y="${y(p) + 4}" class="tick y">${p.toFixed(2)}</text>
      <line x1="${PAD.left}" y1="${y(p)}" x2="${W - PAD.right}" y2="${y(p)}" class="gridline"/>`)
    .join("");
  const series = (est: StreamEstimate | null, cls: string) => {
    if (!est) return "";
    const dots = est.probabilities
      .map((p, i) => `<circle cx="${x(i + 1, m).toFixed(1)}" cy="${y(p).toFixed(1)}" r="3" class="${cls}"/>`)
      .join("");
    const target = `<line x1="${PAD.left}" y1="${y(est.target)}" x2="${W - PAD.right}" ` +
      `y2="${y(est.target)}" class="target ${cls}"/>`;
    return `<path d="${curvePath(est.probabilities)}" class="curve ${cls}"/>${dots}${target}`;
  };
  return `<svg viewBox="0 0 ${W} ${H}" role="img" aria-label="estimated toxicity by dose">
    ${yTicks}${doseTicks}
    ${series(clinician, "clin")}
    ${series(patient, "pat")}
  </svg>`;
}

// ── status strip ────────────────────────────────────────────────────────────

export function statusStrip(state: AppState): string {
  if (!state.trial) return "no trial open";
  const t = state.trial;
  const finalized = t.finalized_dose != null ? ` · finalized at dose ${t.finalized_dose}` : "";
  return (
    `trial ${state.trialId} · week ${week(state.clockWeek)} · ` +
    `${t.n_enrolled}/${t.n_max} patients${finalized}`
  );
}
